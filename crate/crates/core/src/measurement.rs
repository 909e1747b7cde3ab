//! Measurement functionals and the oracle boundary between the recovery
//! engine and the unknown vector.
//!
//! Two families are exposed: `λ_J(x) = dist(x, ∪_{r∈J} E_r)` for a color set
//! `J`, and the separating functional
//! `λ*(x) = max(0, sup_i cε/(2i) − dist(x, εD_i))` over the cells `i` of one
//! color. The outer `max(0, ·)` makes the sup finitely computable: a term is
//! positive only when `dist(x, εD_i) < cε/(2i) ≤ cε/2`, so only cells inside
//! the closed window of radius `cε/2` are enumerated. Same-color cells sit at
//! least `cε` apart, hence at most one term is nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{cells_near, dist_to_colors_unscaled, encode_cell, ColorSet, PartitionSpec};
use crate::scalar::{max_of, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MeasurementDescriptor {
    /// `λ_J`: distance to the union of the color classes in `J`.
    ColorDistance(ColorSet),
    /// `λ*` for cells of one color.
    Separating { color: usize },
}

impl MeasurementDescriptor {
    pub fn colors(colors: impl IntoIterator<Item = usize>) -> Result<Self> {
        Ok(Self::ColorDistance(ColorSet::new(colors)?))
    }

    pub fn separating(color: usize) -> Self {
        Self::Separating { color }
    }

    pub fn check(&self, m: usize) -> Result<()> {
        match self {
            Self::ColorDistance(set) => set.check(m),
            Self::Separating { color } if (1..=m + 1).contains(color) => Ok(()),
            Self::Separating { color } => Err(Error::Contract(format!(
                "separating color {color} outside 1..={}",
                m + 1
            ))),
        }
    }
}

/// Evaluates one functional at `x`.
pub fn evaluate<S: Scalar>(descriptor: &MeasurementDescriptor, x: &[S], spec: &PartitionSpec<S>) -> Result<S> {
    let y = spec.unscale(x)?;
    evaluate_unscaled(descriptor, &y, spec)
}

/// [`evaluate`] on a point already divided by ε.
pub fn evaluate_unscaled<S: Scalar>(descriptor: &MeasurementDescriptor, y: &[S], spec: &PartitionSpec<S>) -> Result<S> {
    descriptor.check(spec.m())?;
    match descriptor {
        MeasurementDescriptor::ColorDistance(set) => Ok(dist_to_colors_unscaled(y, set, spec)? * spec.eps().clone()),
        MeasurementDescriptor::Separating { color } => separating_value(y, *color, spec),
    }
}

fn separating_value<S: Scalar>(y: &[S], color: usize, spec: &PartitionSpec<S>) -> Result<S> {
    let c = spec.c().clone();
    let window = c.clone() / S::from_i64(2);
    let mut best = S::zero();
    let mut nonnegative = 0usize;
    for (cid, dist) in cells_near(y, color - 1, &window, spec)? {
        let code = S::from_biguint(&encode_cell(&cid));
        let term = c.clone() / (S::from_i64(2) * code) - dist;
        if term >= S::zero() {
            nonnegative += 1;
        }
        best = max_of(best, term);
    }
    assert!(
        nonnegative <= 1,
        "separating functional has {nonnegative} nonnegative terms; c exceeds the true separation"
    );
    Ok(best * spec.eps().clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptEntry<S> {
    pub index: usize,
    pub descriptor: MeasurementDescriptor,
    pub value: S,
}

/// The ordered record of everything an oracle answered.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript<S> {
    entries: Vec<TranscriptEntry<S>>,
    budget: usize,
}

#[derive(Serialize, Deserialize)]
struct TranscriptRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trial: Option<usize>,
    q: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    colors: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
    value: serde_json::Value,
}

impl<S: Scalar> Transcript<S> {
    pub fn new(budget: usize) -> Self {
        Self {
            entries: Vec::new(),
            budget,
        }
    }

    pub fn entries(&self) -> &[TranscriptEntry<S>] {
        &self.entries
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn consumed(&self) -> usize {
        self.entries.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.entries.len()
    }

    fn push(&mut self, descriptor: MeasurementDescriptor, value: S) {
        let index = self.entries.len();
        self.entries.push(TranscriptEntry {
            index,
            descriptor,
            value,
        });
    }

    fn records(&self, trial: Option<usize>) -> impl Iterator<Item = TranscriptRecord> + '_ {
        self.entries.iter().map(move |e| {
            let (kind, colors, r) = match &e.descriptor {
                MeasurementDescriptor::ColorDistance(set) => ("colors", Some(set.colors().to_vec()), None),
                MeasurementDescriptor::Separating { color } => ("sep", None, Some(*color)),
            };
            TranscriptRecord {
                trial,
                q: e.index,
                kind: kind.to_string(),
                colors,
                r,
                value: e.value.to_json(),
            }
        })
    }

    /// JSON lines, one entry per line, each terminated by `\n`.
    pub fn to_json_lines(&self) -> String {
        self.to_json_lines_tagged(None)
    }

    /// As [`Self::to_json_lines`], with a leading `"trial"` field on every line when given.
    pub fn to_json_lines_tagged(&self, trial: Option<usize>) -> String {
        self.records(trial)
            .map(|r| serde_json::to_string(&r).expect("transcript record serializes") + "\n")
            .collect()
    }

    pub fn from_json_lines(text: &str, budget: usize) -> Result<Self> {
        let mut out = Self::new(budget);
        for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: TranscriptRecord = serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("transcript line {}: {e}", line_no + 1)))?;
            if rec.q != out.entries.len() {
                return Err(Error::Parse(format!(
                    "transcript line {} has index {}, expected {}",
                    line_no + 1,
                    rec.q,
                    out.entries.len()
                )));
            }
            let descriptor = match (rec.kind.as_str(), rec.colors, rec.r) {
                ("colors", Some(colors), None) => MeasurementDescriptor::colors(colors)?,
                ("sep", None, Some(r)) => MeasurementDescriptor::separating(r),
                _ => {
                    return Err(Error::Parse(format!(
                        "transcript line {}: malformed descriptor",
                        line_no + 1
                    )))
                }
            };
            out.push(descriptor, S::from_json(&rec.value)?);
        }
        if out.consumed() > budget {
            return Err(Error::BudgetExhausted { budget });
        }
        Ok(out)
    }
}

/// The only channel through which an engine learns about the unknown input.
pub trait Oracle<S: Scalar> {
    fn query(&mut self, descriptor: &MeasurementDescriptor) -> Result<S>;
    fn transcript(&self) -> &Transcript<S>;
}

/// Answers queries about a hidden vector.
pub struct SecretOracle<S: Scalar> {
    unscaled: Vec<S>,
    spec: PartitionSpec<S>,
    transcript: Transcript<S>,
}

impl<S: Scalar> std::fmt::Debug for SecretOracle<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretOracle")
            .field("m", &self.spec.m())
            .field("transcript", &self.transcript)
            .finish_non_exhaustive()
    }
}

pub fn make_oracle<S: Scalar>(x_secret: Vec<S>, spec: &PartitionSpec<S>, budget: usize) -> Result<SecretOracle<S>> {
    Ok(SecretOracle {
        unscaled: spec.unscale(&x_secret)?,
        spec: spec.clone(),
        transcript: Transcript::new(budget),
    })
}

impl<S: Scalar> SecretOracle<S> {
    pub fn into_transcript(self) -> Transcript<S> {
        self.transcript
    }
}

impl<S: Scalar> Oracle<S> for SecretOracle<S> {
    fn query(&mut self, descriptor: &MeasurementDescriptor) -> Result<S> {
        if self.transcript.remaining() == 0 {
            return Err(Error::BudgetExhausted {
                budget: self.transcript.budget,
            });
        }
        let value = evaluate_unscaled(descriptor, &self.unscaled, &self.spec)?;
        self.transcript.push(descriptor.clone(), value.clone());
        Ok(value)
    }

    fn transcript(&self) -> &Transcript<S> {
        &self.transcript
    }
}

/// Replays a recorded transcript without access to any secret.
#[derive(Debug)]
pub struct ReplayOracle<S: Scalar> {
    recorded: Transcript<S>,
    replayed: Transcript<S>,
}

impl<S: Scalar> ReplayOracle<S> {
    pub fn new(recorded: Transcript<S>) -> Self {
        let budget = recorded.budget;
        Self {
            recorded,
            replayed: Transcript::new(budget),
        }
    }
}

impl<S: Scalar> Oracle<S> for ReplayOracle<S> {
    fn query(&mut self, descriptor: &MeasurementDescriptor) -> Result<S> {
        let index = self.replayed.consumed();
        if self.replayed.remaining() == 0 {
            return Err(Error::BudgetExhausted {
                budget: self.replayed.budget,
            });
        }
        let entry = self
            .recorded
            .entries
            .get(index)
            .ok_or(Error::ReplayDiverged { index })?;
        if entry.descriptor != *descriptor {
            return Err(Error::ReplayDiverged { index });
        }
        let value = entry.value.clone();
        self.replayed.push(descriptor.clone(), value.clone());
        Ok(value)
    }

    fn transcript(&self) -> &Transcript<S> {
        &self.replayed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{decode_cell, representative};
    use crate::scalar::Exact;
    use num_bigint::BigUint;

    fn q(n: i64, d: i64) -> Exact {
        <Exact as Scalar>::ratio(n, d)
    }

    #[test]
    fn separating_value_at_representative_encodes_the_index() {
        let spec = PartitionSpec::new(2, q(1, 3)).unwrap();
        for n in 1u32..200 {
            for color in 1..=3 {
                let cid = decode_cell(&BigUint::from(n), color, &spec).unwrap();
                let x = representative(&cid, &spec).unwrap();
                let v = evaluate(&MeasurementDescriptor::separating(color), &x, &spec).unwrap();
                let expected = spec.c().clone() * spec.eps().clone() / q(2 * n as i64, 1);
                assert_eq!(v, expected);
            }
        }
    }

    #[test]
    fn color_distance_vanishes_on_own_color() {
        let spec = PartitionSpec::new(3, q(1, 1)).unwrap();
        let x = vec![q(1, 3), q(5, 2), q(-1, 10)];
        let level = crate::partition::level_of(&x, &spec).unwrap();
        let d = MeasurementDescriptor::colors([level + 1]).unwrap();
        assert_eq!(evaluate(&d, &x, &spec).unwrap(), q(0, 1));
    }

    #[test]
    fn descriptor_validation() {
        let spec = PartitionSpec::new(2, q(1, 1)).unwrap();
        let x = vec![q(0, 1), q(0, 1)];
        assert!(evaluate(&MeasurementDescriptor::separating(4), &x, &spec).is_err());
        assert!(evaluate(&MeasurementDescriptor::colors([4]).unwrap(), &x, &spec).is_err());
        assert!(MeasurementDescriptor::colors(Vec::<usize>::new()).is_err());
    }

    #[test]
    fn budget_zero_refuses() {
        let spec = PartitionSpec::new(2, q(1, 1)).unwrap();
        let mut o = make_oracle(vec![q(0, 1), q(0, 1)], &spec, 0).unwrap();
        let d = MeasurementDescriptor::colors([1]).unwrap();
        assert_eq!(o.query(&d), Err(Error::BudgetExhausted { budget: 0 }));
    }

    #[test]
    fn oracles_are_deterministic_and_replayable() {
        let spec = PartitionSpec::new(3, q(1, 10)).unwrap();
        let x = vec![q(7, 3), q(-11, 7), q(1, 2)];
        let queries = [
            MeasurementDescriptor::colors([1, 2]).unwrap(),
            MeasurementDescriptor::colors([3]).unwrap(),
            MeasurementDescriptor::separating(4),
        ];
        let run = || {
            let mut o = make_oracle(x.clone(), &spec, 5).unwrap();
            for d in &queries {
                o.query(d).unwrap();
            }
            o.into_transcript()
        };
        let a = run();
        assert_eq!(a, run());
        let mut replay = ReplayOracle::new(a.clone());
        for d in &queries {
            replay.query(d).unwrap();
        }
        assert_eq!(replay.transcript(), &a);
        let mut diverging = ReplayOracle::new(a);
        assert_eq!(
            diverging.query(&MeasurementDescriptor::separating(1)),
            Err(Error::ReplayDiverged { index: 0 })
        );
    }

    #[test]
    fn json_lines_round_trip() {
        let spec = PartitionSpec::new(2, q(1, 10)).unwrap();
        let mut o = make_oracle(vec![q(1, 7), q(2, 9)], &spec, 3).unwrap();
        o.query(&MeasurementDescriptor::colors([1, 2]).unwrap()).unwrap();
        o.query(&MeasurementDescriptor::separating(2)).unwrap();
        let t = o.into_transcript();
        let text = t.to_json_lines();
        let first = text.lines().next().unwrap();
        assert!(
            first.starts_with(r#"{"q":0,"kind":"colors","colors":[1,2],"value":"#),
            "{first}"
        );
        assert!(text.lines().nth(1).unwrap().contains(r#""kind":"sep","r":2"#));
        assert_eq!(Transcript::<Exact>::from_json_lines(&text, 3).unwrap(), t);
        assert!(Transcript::<Exact>::from_json_lines(&text, 1).is_err());
    }
}
