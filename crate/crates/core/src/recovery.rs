//! The adaptive recovery protocol.
//!
//! Bisection over the `m + 1` colors with distance-to-color-class queries
//! finds a color whose class closure contains the input; one separating query
//! then names the cell, and its centre is returned. At most
//! `⌈log₂(m+1)⌉ + 1` queries are made.

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{make_oracle, MeasurementDescriptor, Oracle};
use crate::partition::{decode_cell, representative, CellId, ColorSet, PartitionSpec};
use crate::scalar::{Mode, Scalar};

/// `⌈log₂(m+1)⌉ + 1`.
pub fn n_of(m: usize) -> usize {
    bisection_rounds(m + 1) + 1
}

/// `⌈log₂ colors⌉`, the number of halving rounds.
pub fn bisection_rounds(colors: usize) -> usize {
    assert!(colors >= 1);
    (usize::BITS - (colors - 1).leading_zeros()) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult<S> {
    pub x_hat: Vec<S>,
    pub cell: CellId,
    pub queries_used: usize,
    /// `ε` in exact mode, `ε + n(m)·τ` in float64 mode.
    pub error_bound: S,
    /// Candidate color sets after each bisection round, starting with all colors.
    pub candidates: Vec<ColorSet>,
}

#[derive(Serialize)]
struct RecoveryJson<'a> {
    x_hat: Vec<serde_json::Value>,
    cell: &'a CellId,
    queries: usize,
    error_bound: String,
}

impl<S: Scalar> RecoveryResult<S> {
    pub fn color(&self) -> usize {
        self.cell.color()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RecoveryJson {
            x_hat: self.x_hat.iter().map(Scalar::to_json).collect(),
            cell: &self.cell,
            queries: self.queries_used,
            error_bound: self.error_bound.to_string(),
        })
        .expect("recovery result serializes")
    }
}

/// Runs the protocol against `oracle`. The engine sees only query outcomes.
pub fn recover<S: Scalar, O: Oracle<S>>(oracle: &mut O, spec: &PartitionSpec<S>) -> Result<RecoveryResult<S>> {
    let m = spec.m();
    let tau = spec.tolerance();
    let start = oracle.transcript().consumed();
    let mut candidates: Vec<usize> = (1..=m + 1).collect();
    let mut trace = vec![ColorSet::all(m)];
    while candidates.len() > 1 {
        let half = candidates.len().div_ceil(2);
        let probe = ColorSet::new(candidates[..half].iter().copied())?;
        let value = oracle.query(&MeasurementDescriptor::ColorDistance(probe))?;
        if value < S::zero() {
            return Err(Error::InconsistentOutcome(format!("negative distance {value}")));
        }
        if value <= tau {
            candidates.truncate(half);
        } else {
            candidates.drain(..half);
        }
        trace.push(ColorSet::new(candidates.iter().copied())?);
    }
    let color = candidates[0];
    let lambda = oracle.query(&MeasurementDescriptor::separating(color))?;
    let code = decode_index(&lambda, spec)?;
    let cell = decode_cell(&code, color, spec)?;
    let x_hat = representative(&cell, spec)?;
    let queries_used = oracle.transcript().consumed() - start;
    let error_bound = spec.eps().clone() + S::from_i64(n_of(m) as i64) * tau;
    Ok(RecoveryResult {
        x_hat,
        cell,
        queries_used,
        error_bound,
        candidates: trace,
    })
}

/// `i* = cε / (2λ*)`, exactly in rational mode, with a rounding guard in float64.
fn decode_index<S: Scalar>(lambda: &S, spec: &PartitionSpec<S>) -> Result<BigUint> {
    let scale = spec.c().clone() * spec.eps().clone() / S::from_i64(2);
    match S::MODE {
        Mode::Exact => {
            if *lambda <= S::zero() {
                return Err(Error::InconsistentOutcome(format!(
                    "separating value {lambda} is not positive"
                )));
            }
            let index = scale / lambda.clone();
            if !index.is_integer() {
                return Err(Error::InconsistentOutcome(format!(
                    "separating value gives non-integer index {index}"
                )));
            }
            let r = index
                .to_rational()
                .ok_or_else(|| Error::InconsistentOutcome("index not finite".into()))?;
            r.to_integer()
                .to_biguint()
                .ok_or_else(|| Error::InconsistentOutcome("negative index".into()))
        }
        Mode::Float64 => {
            let lam = lambda.to_f64();
            let scale = scale.to_f64();
            let slack = n_of(spec.m()) as f64 * spec.tolerance().to_f64();
            if !(lam > slack) {
                return Err(Error::PrecisionExceeded(format!(
                    "separating value {lam:e} is within tolerance of zero"
                )));
            }
            let raw = scale / lam;
            let limit = spec.max_cell_index().unwrap_or(u64::MAX);
            if !(raw.is_finite() && raw >= 0.5 && raw <= limit as f64 + 0.5) {
                return Err(Error::PrecisionExceeded(format!(
                    "index {raw:e} outside the decodable range 1..={limit}"
                )));
            }
            let index = raw.round() as u64;
            let value_of = |i: u64| scale / i as f64;
            let fits = (value_of(index) - lam).abs() <= slack;
            let ambiguous = [index.saturating_sub(1), index + 1]
                .into_iter()
                .filter(|&i| i >= 1 && i != index)
                .any(|i| (value_of(i) - lam).abs() <= slack);
            if !fits || ambiguous {
                return Err(Error::PrecisionExceeded(format!(
                    "index {index} not resolvable at tolerance {slack:e}"
                )));
            }
            Ok(BigUint::from(index))
        }
    }
}

/// Convenience wrapper: builds an oracle over `x` with budget `n(m)` and recovers.
pub fn recover_point<S: Scalar>(x: &[S], spec: &PartitionSpec<S>) -> Result<RecoveryResult<S>> {
    let mut oracle = make_oracle(x.to_vec(), spec, n_of(spec.m()))?;
    recover(&mut oracle, spec)
}

/// Like [`recover_point`] but also hands back the oracle's transcript.
pub fn recover_point_with_transcript<S: Scalar>(
    x: &[S],
    spec: &PartitionSpec<S>,
) -> Result<(RecoveryResult<S>, crate::measurement::Transcript<S>)> {
    let mut oracle = make_oracle(x.to_vec(), spec, n_of(spec.m()))?;
    let result = recover(&mut oracle, spec)?;
    Ok((result, oracle.into_transcript()))
}

/// `max_j |a_j − b_j|`.
pub fn max_norm_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).abs())
        .fold(S::zero(), crate::scalar::max_of)
}
