//! Non-adaptive sketches made adaptive, partition-of-unity reconstruction over
//! a covering, and s-numbers of diagonal operators between Hilbert spaces.
//!
//! [`wrap_sketch`] spends one measurement on `R = ∥N(f)∥_∞`, picks a precision
//! `δ` from the caller's continuity modulus of `Φ` on the cube of radius
//! `R + 1`, and recovers `N(f)` to precision `δ` with the colored-partition
//! protocol through composed functionals `λ ∘ N`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{make_oracle, Transcript};
use crate::partition::PartitionSpec;
use crate::recovery::{max_norm_distance, n_of, recover};
use crate::scalar::{max_of, min_of, Exact, Scalar};

type VecMap<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;
type Modulus<S> = Arc<dyn Fn(&S, &S) -> S + Send + Sync>;

/// Distance used on the output space of a sketch problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMetric {
    Max,
    Euclidean,
}

impl OutputMetric {
    /// `dist(a, b) ≤ bound`, decided exactly for rational scalars.
    pub fn within<S: Scalar>(&self, a: &[S], b: &[S], bound: &S) -> bool {
        match self {
            OutputMetric::Max => max_norm_distance(a, b) <= *bound,
            OutputMetric::Euclidean => *bound >= S::zero() && squared_distance(a, b) <= bound.clone() * bound.clone(),
        }
    }

    pub fn distance_f64<S: Scalar>(&self, a: &[S], b: &[S]) -> f64 {
        match self {
            OutputMetric::Max => max_norm_distance(a, b).to_f64(),
            OutputMetric::Euclidean => squared_distance(a, b).to_f64().sqrt(),
        }
    }
}

fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| {
        let d = x.clone() - y.clone();
        acc + d.clone() * d
    })
}

/// A non-adaptive sketch `N: F → ℝ^m` with reconstruction `Φ: ℝ^m → G`.
///
/// `modulus(ε, r)` must return `δ > 0` such that `Φ` moves by at most `ε`
/// when its argument moves by at most `δ` in the max norm inside `[−r, r]^m`.
#[derive(Clone)]
pub struct SketchProblem<S> {
    m: usize,
    sketch: VecMap<S>,
    reconstruct: VecMap<S>,
    modulus: Modulus<S>,
    metric: OutputMetric,
}

impl<S: Scalar> std::fmt::Debug for SketchProblem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SketchProblem")
            .field("m", &self.m)
            .field("metric", &self.metric)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> SketchProblem<S> {
    pub fn new(
        m: usize,
        sketch: impl Fn(&[S]) -> Vec<S> + Send + Sync + 'static,
        reconstruct: impl Fn(&[S]) -> Vec<S> + Send + Sync + 'static,
        modulus: impl Fn(&S, &S) -> S + Send + Sync + 'static,
        metric: OutputMetric,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Contract("sketch dimension must be positive".into()));
        }
        Ok(Self {
            m,
            sketch: Arc::new(sketch),
            reconstruct: Arc::new(reconstruct),
            modulus: Arc::new(modulus),
            metric,
        })
    }

    /// `N = Φ = id` on `ℝ^m` with modulus `ε ↦ ε`.
    pub fn identity(m: usize) -> Result<Self> {
        Self::new(
            m,
            |f: &[S]| f.to_vec(),
            |y: &[S]| y.to_vec(),
            |eps: &S, _: &S| eps.clone(),
            OutputMetric::Max,
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn metric(&self) -> OutputMetric {
        self.metric
    }

    pub fn sketch(&self, f: &[S]) -> Result<Vec<S>> {
        let y = (self.sketch)(f);
        if y.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                got: y.len(),
            });
        }
        Ok(y)
    }

    pub fn reconstruct(&self, y: &[S]) -> Vec<S> {
        (self.reconstruct)(y)
    }

    pub fn modulus(&self, eps: &S, radius: &S) -> S {
        (self.modulus)(eps, radius)
    }

    /// `Φ(N(f))`, the reference output of the non-adaptive method.
    pub fn reference(&self, f: &[S]) -> Result<Vec<S>> {
        Ok(self.reconstruct(&self.sketch(f)?))
    }
}

/// Continuous functionals of a hidden input `f`, available only through
/// its sketch: the norm `∥N(f)∥_∞` and compositions `λ ∘ N`.
pub struct SketchOracle<'a, S: Scalar> {
    problem: &'a SketchProblem<S>,
    input: &'a [S],
    norm_queries: usize,
}

impl<'a, S: Scalar> SketchOracle<'a, S> {
    pub fn new(problem: &'a SketchProblem<S>, input: &'a [S]) -> Self {
        Self {
            problem,
            input,
            norm_queries: 0,
        }
    }

    pub fn norm(&mut self) -> Result<S> {
        self.norm_queries += 1;
        let y = self.problem.sketch(self.input)?;
        Ok(y.iter().map(Scalar::abs).fold(S::zero(), max_of))
    }

    /// Recovers `N(f)` to precision `spec.eps()` through composed functionals.
    fn recover_sketch(&self, spec: &PartitionSpec<S>) -> Result<(Vec<S>, Transcript<S>)> {
        let mut oracle = make_oracle(self.problem.sketch(self.input)?, spec, n_of(spec.m()))?;
        let result = recover(&mut oracle, spec)?;
        Ok((result.x_hat, oracle.into_transcript()))
    }
}

#[derive(Clone, Debug)]
pub struct WrappedOutput<S> {
    pub output: Vec<S>,
    pub sketch_estimate: Vec<S>,
    pub radius: S,
    pub delta: S,
    pub queries: usize,
    pub transcript: Transcript<S>,
}

/// Adaptive algorithm built from a non-adaptive sketch: at most `1 + n(m)` queries,
/// output within `ε` of `Φ(N(f))`.
pub fn wrap_sketch<S: Scalar>(problem: &SketchProblem<S>, eps: &S, input: &[S]) -> Result<WrappedOutput<S>> {
    if !(*eps > S::zero()) {
        return Err(Error::Contract(format!("precision {eps} must be positive")));
    }
    let mut oracle = SketchOracle::new(problem, input);
    let radius = oracle.norm()?;
    let modulus = problem.modulus(eps, &(radius.clone() + S::one()));
    if !(modulus > S::zero()) {
        return Err(Error::Contract(format!("continuity modulus {modulus} is not positive")));
    }
    let delta = min_of(modulus, S::one());
    let spec = PartitionSpec::new(problem.m(), delta.clone())?;
    let (sketch_estimate, transcript) = oracle.recover_sketch(&spec)?;
    let queries = oracle.norm_queries + transcript.consumed();
    Ok(WrappedOutput {
        output: problem.reconstruct(&sketch_estimate),
        sketch_estimate,
        radius,
        delta,
        queries,
        transcript,
    })
}

/// A ball `{y : ∥y − center∥_∞ < radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball<S> {
    pub center: Vec<S>,
    pub radius: S,
}

impl<S: Scalar> Ball<S> {
    pub fn contains(&self, y: &[S]) -> bool {
        max_norm_distance(&self.center, y) < self.radius
    }
}

/// Covering sets `C_i` with output representatives `g_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Covering<S> {
    sets: Vec<Ball<S>>,
    representatives: Vec<Vec<S>>,
}

impl<S: Scalar> Covering<S> {
    pub fn new(sets: Vec<Ball<S>>, representatives: Vec<Vec<S>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Contract("covering needs at least one set".into()));
        }
        if sets.len() != representatives.len() {
            return Err(Error::Dimension {
                expected: sets.len(),
                got: representatives.len(),
            });
        }
        let n = sets[0].center.len();
        let p = representatives[0].len();
        for (ball, g) in sets.iter().zip(&representatives) {
            if !(ball.radius > S::zero()) {
                return Err(Error::Contract(format!("ball radius {} must be positive", ball.radius)));
            }
            if ball.center.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: ball.center.len(),
                });
            }
            if g.len() != p {
                return Err(Error::Dimension {
                    expected: p,
                    got: g.len(),
                });
            }
        }
        Ok(Self { sets, representatives })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Ball<S>] {
        &self.sets
    }

    pub fn representatives(&self) -> &[Vec<S>] {
        &self.representatives
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PouOutput<S> {
    pub point: Vec<S>,
    pub weights: Vec<S>,
}

/// `Φ(y) = Σ_i w_i(y) g_i` with `w_i ∝ dist(y, N(F) \ C_i)`, `N(F)` given by
/// a finite sample.
///
/// A set whose complement misses the whole sample has infinite distance;
/// such sets share the weight uniformly and the others get zero.
pub fn pou_reconstruct<S: Scalar>(cov: &Covering<S>, sample: &[Vec<S>], y: &[S]) -> Result<PouOutput<S>> {
    let n = cov.sets[0].center.len();
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    if let Some(bad) = sample.iter().find(|p| p.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: bad.len(),
        });
    }
    let raw: Vec<Option<S>> = cov
        .sets
        .iter()
        .map(|ball| {
            sample
                .iter()
                .filter(|p| !ball.contains(p))
                .map(|p| max_norm_distance(p, y))
                .reduce(min_of)
        })
        .collect();
    let unbounded = raw.iter().filter(|d| d.is_none()).count();
    let weights: Vec<S> = if unbounded > 0 {
        let share = S::ratio(1, unbounded as i64);
        raw.iter()
            .map(|d| if d.is_none() { share.clone() } else { S::zero() })
            .collect()
    } else {
        let raw: Vec<S> = raw.into_iter().flatten().collect();
        let total = raw.iter().cloned().fold(S::zero(), |a, b| a + b);
        if !(total > S::zero()) {
            return Err(Error::OutsideCovering);
        }
        raw.into_iter().map(|d| d / total.clone()).collect()
    };
    let p = cov.representatives[0].len();
    let mut point = vec![S::zero(); p];
    for (w, g) in weights.iter().zip(&cov.representatives) {
        for (acc, gj) in point.iter_mut().zip(g) {
            *acc = acc.clone() + w.clone() * gj.clone();
        }
    }
    Ok(PouOutput { point, weights })
}

/// `S = diag(σ_1, …, σ_d)` between Hilbert spaces, truncated at `d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalOperator {
    weights: Vec<f64>,
    tail: Option<f64>,
}

impl DiagonalOperator {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Contract("diagonal operator needs at least one weight".into()));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Contract(format!(
                "weight σ_{} = {} is not positive",
                k + 1,
                weights[k]
            )));
        }
        if let Some(k) = weights.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::Contract(format!("weights increase at σ_{}", k + 2)));
        }
        Ok(Self { weights, tail: None })
    }

    /// `σ_k = sigma(k)` for `k = 1..=d`, remembering `σ_{d+1}` as the truncation error.
    pub fn from_fn(d: usize, sigma: impl Fn(usize) -> f64) -> Result<Self> {
        let mut op = Self::new((1..=d).map(&sigma).collect())?;
        let tail = sigma(d + 1);
        if !(tail.is_finite() && tail >= 0.0 && tail <= op.weights[d - 1]) {
            return Err(Error::Contract(format!("σ_{} = {tail} breaks the ordering", d + 1)));
        }
        op.tail = Some(tail);
        Ok(op)
    }

    /// `σ_k = 2^{−k}`.
    pub fn geometric(d: usize) -> Result<Self> {
        Self::from_fn(d, |k| 0.5f64.powi(k as i32))
    }

    /// `σ_k = 1/k`.
    pub fn harmonic(d: usize) -> Result<Self> {
        Self::from_fn(d, |k| 1.0 / k as f64)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `σ_k`, one-based.
    pub fn sigma(&self, k: usize) -> Result<f64> {
        match k {
            0 => Err(Error::Contract("singular values are indexed from 1".into())),
            k if k <= self.dim() => Ok(self.weights[k - 1]),
            _ => Err(Error::Truncation {
                n: k - 1,
                d: self.dim(),
            }),
        }
    }

    /// `σ_{d+1}`, when known.
    pub fn truncation_error(&self) -> Option<f64> {
        self.tail
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(f).map(|(s, x)| s * x).collect()
    }
}

/// Bernstein and Kolmogorov numbers `(b_n, d_n)`; both equal `σ_{n+1}`.
pub fn s_numbers(op: &DiagonalOperator, n: usize) -> Result<(f64, f64)> {
    if n >= op.dim() {
        return Err(Error::Truncation { n, d: op.dim() });
    }
    let s = op.weights[n];
    Ok((s, s))
}

/// Sketch `N(f) = (σ_1 f_1, …, σ_m f_m)` with `Φ` the zero-padded embedding
/// into `ℝ^d`, compared in the Euclidean norm. `Φ` is `⌈√m⌉`-Lipschitz from
/// the max norm.
pub fn diagonal_sketch(op: &DiagonalOperator, m: usize) -> Result<SketchProblem<Exact>> {
    let d = op.dim();
    if m == 0 || m >= d {
        return Err(Error::Contract(format!("sketch size {m} must lie in 1..{d}")));
    }
    let sigma = exact_weights(op)?;
    let lipschitz = ceil_sqrt(m) as i64;
    let head: Vec<Exact> = sigma[..m].to_vec();
    SketchProblem::new(
        m,
        move |f: &[Exact]| head.iter().zip(f).map(|(s, x)| s * x).collect(),
        move |y: &[Exact]| {
            let mut out = y.to_vec();
            out.resize(d, <Exact as Scalar>::zero());
            out
        },
        move |eps: &Exact, _: &Exact| eps / <Exact as Scalar>::from_i64(lipschitz),
        OutputMetric::Euclidean,
    )
}

fn exact_weights(op: &DiagonalOperator) -> Result<Vec<Exact>> {
    op.weights
        .iter()
        .map(|&w| <Exact as Scalar>::from_f64(w).ok_or_else(|| Error::Contract(format!("weight {w} not finite"))))
        .collect()
}

fn ceil_sqrt(m: usize) -> usize {
    let mut r = (m as f64).sqrt() as usize;
    while r * r < m {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= m {
        r -= 1;
    }
    r
}

/// `m = 2^{n−2}`, the sketch size reachable with `n` adaptive queries.
pub fn sketch_size(n: usize) -> Result<usize> {
    if !(2..usize::BITS as usize).contains(&n) {
        return Err(Error::Contract(format!("query count {n} must be at least 2")));
    }
    Ok(1 << (n - 2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedupTrial {
    pub trial: usize,
    pub queries: usize,
    /// `∥S f − Φ(wrapped)∥_2`.
    pub error: f64,
    /// `∥Φ(wrapped) − Φ(N(f))∥_2`.
    pub sketch_error: f64,
    /// Exact check of `error ≤ σ_{m+1} + ε`.
    pub within_bound: bool,
    /// Exact check of `sketch_error ≤ ε`.
    pub within_eps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedupReport {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub eps: f64,
    pub trials: Vec<SpeedupTrial>,
    pub max_error: f64,
    /// `σ_{m+1} + ε`.
    pub bound: f64,
    /// `σ_{n+1}`, the best error of `n` non-adaptive continuous measurements.
    pub benchmark: f64,
    /// `σ_{d+1}`, when known.
    pub truncation_error: Option<f64>,
    /// `1 + n(m)`, the query budget of every trial.
    pub queries: usize,
}

impl SpeedupReport {
    pub fn passed(&self) -> bool {
        !self.trials.is_empty()
            && self
                .trials
                .iter()
                .all(|t| t.within_bound && t.within_eps && t.queries <= self.queries && self.queries <= self.n + 1)
    }

    pub fn beats_benchmark(&self) -> bool {
        self.max_error <= self.benchmark
    }
}

/// A point of the unit ball of `ℝ^d`: Gaussian direction, radius `U^{1/d}`.
pub fn unit_ball_sample(d: usize, rng: &mut impl Rng) -> Vec<Exact> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            continue;
        }
        let r = rng.random::<f64>().powf(1.0 / d as f64);
        let f: Vec<Exact> = g
            .iter()
            .map(|v| <Exact as Scalar>::from_f64(v / norm * r).expect("finite sample"))
            .collect();
        let sq = f.iter().fold(<Exact as Scalar>::zero(), |a, v| a + v * v);
        if sq <= <Exact as Scalar>::one() {
            return f;
        }
    }
}

/// The seeded input of one demo trial.
pub fn speedup_input(d: usize, seed: u64, trial: usize) -> Vec<Exact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    unit_ball_sample(d, &mut rng)
}

/// Runs one wrapped-sketch trial on input `f` and checks it exactly.
pub fn speedup_trial(
    op: &DiagonalOperator,
    problem: &SketchProblem<Exact>,
    eps: &Exact,
    trial: usize,
    f: &[Exact],
) -> Result<SpeedupTrial> {
    let m = problem.m();
    let sigma = exact_weights(op)?;
    let truth: Vec<Exact> = sigma.iter().zip(f).map(|(s, x)| s * x).collect();
    let wrapped = wrap_sketch(problem, eps, f)?;
    let reference = problem.reference(f)?;
    let bound = sigma[m].clone() + eps.clone();
    let metric = problem.metric();
    Ok(SpeedupTrial {
        trial,
        queries: wrapped.queries,
        error: metric.distance_f64(&truth, &wrapped.output),
        sketch_error: metric.distance_f64(&reference, &wrapped.output),
        within_bound: metric.within(&truth, &wrapped.output, &bound),
        within_eps: metric.within(&reference, &wrapped.output, eps),
    })
}

/// Adaptive recovery with `n` queries against the diagonal operator,
/// through the sketch of its top `m = 2^{n−2}` coordinates.
pub fn hilbert_speedup_demo(
    op: &DiagonalOperator,
    n: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<SpeedupReport> {
    let problem = speedup_problem(op, n)?;
    let eps_exact = speedup_eps(eps)?;
    let rows = (0..trials)
        .map(|t| speedup_trial(op, &problem, &eps_exact, t, &speedup_input(op.dim(), seed, t)))
        .collect::<Result<Vec<_>>>()?;
    speedup_report(op, n, eps, rows)
}

/// The sketch problem for `n` queries; see [`hilbert_speedup_demo`].
pub fn speedup_problem(op: &DiagonalOperator, n: usize) -> Result<SketchProblem<Exact>> {
    let m = sketch_size(n)?;
    if m >= op.dim() {
        return Err(Error::Truncation { n: m, d: op.dim() });
    }
    diagonal_sketch(op, m)
}

pub fn speedup_eps(eps: f64) -> Result<Exact> {
    match <Exact as Scalar>::from_f64(eps) {
        Some(e) if eps > 0.0 => Ok(e),
        _ => Err(Error::Contract(format!("precision {eps} must be positive"))),
    }
}

/// Assembles a report from trial rows computed elsewhere, e.g. in parallel.
pub fn speedup_report(op: &DiagonalOperator, n: usize, eps: f64, trials: Vec<SpeedupTrial>) -> Result<SpeedupReport> {
    let m = sketch_size(n)?;
    let max_error = trials.iter().map(|t| t.error).fold(0.0, f64::max);
    Ok(SpeedupReport {
        n,
        m,
        d: op.dim(),
        eps,
        max_error,
        bound: op.sigma(m + 1)? + eps,
        benchmark: op.sigma(n + 1)?,
        truncation_error: op.truncation_error(),
        queries: 1 + n_of(m),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        <Exact as Scalar>::ratio(n, d)
    }

    #[test]
    fn identity_sketch_uses_four_queries() {
        let problem = SketchProblem::<Exact>::identity(2).unwrap();
        let eps = q(1, 10);
        let f = vec![q(37, 7), q(-5, 3)];
        let out = wrap_sketch(&problem, &eps, &f).unwrap();
        assert!(out.queries <= 4);
        assert!(max_norm_distance(&out.output, &f) <= eps.clone() * q(2, 1));
        assert_eq!(out.radius, q(37, 7));
        assert_eq!(out.delta, eps);
    }

    #[test]
    fn non_positive_modulus_is_rejected() {
        let problem =
            SketchProblem::<Exact>::new(1, |f| f.to_vec(), |y| y.to_vec(), |_, _| q(0, 1), OutputMetric::Max).unwrap();
        let err = wrap_sketch(&problem, &q(1, 10), &[q(1, 1)]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn linear_reconstruction_within_eps() {
        // Φ(y) = A y with A = [[1, 2], [-3, 1]], Lipschitz 4 in the max norm.
        let problem = SketchProblem::<Exact>::new(
            2,
            |f| vec![f[0].clone() - f[2].clone(), f[1].clone()],
            |y| {
                vec![
                    y[0].clone() + q(2, 1) * y[1].clone(),
                    q(-3, 1) * y[0].clone() + y[1].clone(),
                ]
            },
            |eps, _| eps / q(4, 1),
            OutputMetric::Max,
        )
        .unwrap();
        let eps = q(1, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let f: Vec<Exact> = (0..3).map(|_| q(rng.random_range(-5000..5000), 1000)).collect();
            let out = wrap_sketch(&problem, &eps, &f).unwrap();
            assert!(out.queries <= 1 + n_of(2));
            assert!(max_norm_distance(&out.output, &problem.reference(&f).unwrap()) <= eps);
        }
    }

    #[test]
    fn query_count_formula() {
        for m in 1..=9 {
            let problem = SketchProblem::<Exact>::identity(m).unwrap();
            let ceil_log = (0..).find(|k| 1usize << k > m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            let mut most = 0;
            for _ in 0..200 {
                let f: Vec<Exact> = (0..m).map(|_| q(rng.random_range(-3000..3000), 1000)).collect();
                let out = wrap_sketch(&problem, &q(1, 4), &f).unwrap();
                assert!(out.queries <= ceil_log + 2);
                most = most.max(out.queries);
            }
            assert_eq!(most, ceil_log + 2);
        }
    }

    #[test]
    fn single_set_covering_is_constant() {
        let cov = Covering::new(
            vec![Ball {
                center: vec![0.0, 0.0],
                radius: 10.0,
            }],
            vec![vec![3.0, -1.0, 2.0]],
        )
        .unwrap();
        let sample = vec![vec![20.0, 0.0], vec![1.0, 1.0]];
        for y in [[0.0, 0.0], [4.0, -2.0], [9.5, 9.5]] {
            let out = pou_reconstruct(&cov, &sample, &y).unwrap();
            assert_eq!(out.point, vec![3.0, -1.0, 2.0]);
            assert_eq!(out.weights, vec![1.0]);
        }
    }

    #[test]
    fn isolated_set_returns_its_representative() {
        let cov = Covering::new(
            vec![
                Ball {
                    center: vec![q(0, 1)],
                    radius: q(1, 1),
                },
                Ball {
                    center: vec![q(5, 1)],
                    radius: q(1, 1),
                },
            ],
            vec![vec![q(7, 1)], vec![q(-2, 1)]],
        )
        .unwrap();
        let sample = vec![vec![q(0, 1)], vec![q(1, 2)], vec![q(5, 1)]];
        let out = pou_reconstruct(&cov, &sample, &[q(1, 2)]).unwrap();
        assert_eq!(out.point, vec![q(7, 1)]);
        assert_eq!(out.weights, vec![q(1, 1), q(0, 1)]);
    }

    #[test]
    fn zero_denominator_is_outside_covering() {
        let cov = Covering::new(
            vec![Ball {
                center: vec![0.0],
                radius: 1.0,
            }],
            vec![vec![1.0]],
        )
        .unwrap();
        let sample = vec![vec![5.0]];
        assert_eq!(pou_reconstruct(&cov, &sample, &[5.0]), Err(Error::OutsideCovering));
    }

    #[test]
    fn s_numbers_match_svd() {
        let op = DiagonalOperator::new(vec![1.0, 0.5, 1.0 / 3.0, 0.25]).unwrap();
        let svd = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(op.weights().to_vec()))
            .svd(false, false)
            .singular_values;
        let mut sv: Vec<f64> = svd.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(s_numbers(&op, 2).unwrap(), (1.0 / 3.0, 1.0 / 3.0));
        assert!((sv[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s_numbers(&op, 0).unwrap(), (1.0, 1.0));
        for (n, &expected) in sv.iter().enumerate().take(4) {
            let (b, d) = s_numbers(&op, n).unwrap();
            assert_eq!(b, d);
            assert!((b - expected).abs() < 1e-15);
        }
        assert_eq!(s_numbers(&op, 4), Err(Error::Truncation { n: 4, d: 4 }));
    }

    #[test]
    fn operator_rejects_unsorted_weights() {
        assert!(DiagonalOperator::new(vec![1.0, 2.0]).is_err());
        assert!(DiagonalOperator::new(vec![1.0, 0.0]).is_err());
        assert!(DiagonalOperator::new(vec![]).is_err());
        assert_eq!(
            DiagonalOperator::geometric(64).unwrap().truncation_error(),
            Some(0.5f64.powi(65))
        );
    }

    #[test]
    fn zero_input_error_is_within_eps() {
        let op = DiagonalOperator::geometric(64).unwrap();
        let problem = speedup_problem(&op, 4).unwrap();
        let eps = speedup_eps(1e-3).unwrap();
        let f = vec![<Exact as Scalar>::zero(); 64];
        let row = speedup_trial(&op, &problem, &eps, 0, &f).unwrap();
        assert!(row.error <= 1e-3);
        assert!(OutputMetric::Euclidean.within(
            &vec![<Exact as Scalar>::zero(); 64],
            &wrap_sketch(&problem, &eps, &f).unwrap().output,
            &eps
        ));
    }

    #[test]
    fn geometric_demo_small() {
        let op = DiagonalOperator::geometric(64).unwrap();
        let report = hilbert_speedup_demo(&op, 4, 1e-3, 50, 3).unwrap();
        assert!(report.passed());
        assert_eq!(report.m, 4);
        assert_eq!(report.queries, 5);
        assert_eq!(report.bound, 0.5f64.powi(5) + 1e-3);
        assert!(report.beats_benchmark());
    }

    #[test]
    fn harmonic_demo_small() {
        let op = DiagonalOperator::harmonic(64).unwrap();
        let report = hilbert_speedup_demo(&op, 5, 1e-3, 20, 5).unwrap();
        assert!(report.passed());
        assert_eq!(report.m, 8);
        assert_eq!(report.bound, 1.0 / 9.0 + 1e-3);
    }

    #[test]
    fn unit_ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let f = unit_ball_sample(16, &mut rng);
            let sq = f.iter().fold(<Exact as Scalar>::zero(), |a, v| a + v * v);
            assert!(sq <= <Exact as Scalar>::one());
        }
    }
}
