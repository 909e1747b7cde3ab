//! Brute-force oracles and empirical validators for the partition.
//!
//! Everything here is written against the raw counting definition
//! `count(δ) = #{j : dist(x_j, ℤ) ≤ δ}` and never calls into the closed-form
//! distance code of [`crate::partition`]. Grid sweeps work on the unscaled
//! partition with exact integer arithmetic: a grid point is an integer vector
//! `p` standing for `p / H`, with resolution `h = 1 / H`.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, GridFlag, Result};
use crate::measurement::{evaluate_unscaled, MeasurementDescriptor};
use crate::partition::{
    cell_of, dist_to_cell_unscaled, dist_to_levels_unscaled, level_of, CellId, ColorSet, PartitionSpec,
};
use crate::scalar::{Exact, Scalar};

/// Upper bound on the number of points in one grid sweep.
pub const MAX_GRID_POINTS: u64 = 100_000_000;

/// Exhaustive grid modes are limited to this dimension.
pub const MAX_EXHAUSTIVE_DIM: usize = 3;

/// `H` with `h = 1/H`: `10⁻³` for `m ≤ 2`, `10⁻²` for `m = 3`.
pub fn default_resolution(m: usize) -> i64 {
    if m <= 2 {
        1000
    } else {
        100
    }
}

/// An axis-aligned box sampled at step `1/H`; bounds are in grid units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    inv_h: i64,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl GridSpec {
    pub fn new(inv_h: i64, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if inv_h <= 0 {
            return Err(Error::Contract("grid resolution must be positive".into()));
        }
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Contract("grid box must be nonempty".into()));
        }
        let g = Self { inv_h, lo, hi };
        if g.point_count() > MAX_GRID_POINTS {
            return Err(Error::Grid(GridFlag::TooLarge));
        }
        Ok(g)
    }

    /// The smallest grid box covering `[lo_j, hi_j]` in every coordinate.
    pub fn covering(inv_h: i64, lo: &[BigRational], hi: &[BigRational]) -> Result<Self> {
        let h = BigInt::from(inv_h);
        let to_grid = |v: &BigRational, up: bool| -> Result<i64> {
            let scaled = v * BigRational::from_integer(h.clone());
            let r = if up { scaled.ceil() } else { scaled.floor() };
            r.to_integer()
                .to_i64()
                .ok_or_else(|| Error::Contract("grid box out of range".into()))
        };
        let lo = lo.iter().map(|v| to_grid(v, false)).collect::<Result<Vec<_>>>()?;
        let hi = hi.iter().map(|v| to_grid(v, true)).collect::<Result<Vec<_>>>()?;
        Self::new(inv_h, lo, hi)
    }

    /// The cube `[lo, hi]^m` in unscaled units, given as fractions `lo_num / lo_den`.
    pub fn cube(m: usize, inv_h: i64, lo: BigRational, hi: BigRational) -> Result<Self> {
        Self::covering(inv_h, &vec![lo; m], &vec![hi; m])
    }

    /// The default validation box: `[-2, 3]` for `m = 1`, `[-1/2, 3/2]^m` otherwise.
    pub fn default_box(m: usize) -> Result<Self> {
        if m > MAX_EXHAUSTIVE_DIM {
            return Err(Error::Unsupported(format!(
                "exhaustive grid mode needs m ≤ {MAX_EXHAUSTIVE_DIM}, got {m}"
            )));
        }
        let q = |n: i64, d: i64| <Exact as Scalar>::ratio(n, d);
        if m == 1 {
            Self::cube(1, default_resolution(1), q(-2, 1), q(3, 1))
        } else {
            Self::cube(m, default_resolution(m), q(-1, 2), q(3, 2))
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn inv_h(&self) -> i64 {
        self.inv_h
    }

    pub fn h(&self) -> Exact {
        <Exact as Scalar>::ratio(1, self.inv_h)
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn point_count(&self) -> u64 {
        (0..self.dim()).map(|a| self.extent(a) as u64).product()
    }

    pub fn with_resolution(&self, inv_h: i64) -> Result<Self> {
        let scale = |v: i64, up: bool| {
            let n = v as i128 * inv_h as i128;
            let d = self.inv_h as i128;
            (if up {
                n.div_euclid(d) + (n.rem_euclid(d) != 0) as i128
            } else {
                n.div_euclid(d)
            }) as i64
        };
        Self::new(
            inv_h,
            self.lo.iter().map(|&v| scale(v, false)).collect(),
            self.hi.iter().map(|&v| scale(v, true)).collect(),
        )
    }
}

/// `δ` as an exact fraction `num / den`.
#[derive(Clone, Copy, Debug)]
struct Frac {
    num: i128,
    den: i128,
}

fn fractions<S: Scalar>(spec: &PartitionSpec<S>) -> Result<Vec<Frac>> {
    spec.delta()
        .iter()
        .map(|d| {
            let r = d
                .to_rational()
                .ok_or_else(|| Error::InvalidSpec("non-finite δ".into()))?;
            Ok(Frac {
                num: r
                    .numer()
                    .to_i128()
                    .ok_or_else(|| Error::InvalidSpec("δ too large".into()))?,
                den: r
                    .denom()
                    .to_i128()
                    .ok_or_else(|| Error::InvalidSpec("δ too large".into()))?,
            })
        })
        .collect()
}

/// Per-axis lookup: for each grid value, which `δ_i` it lies within of ℤ.
struct AxisTable {
    lo: i64,
    /// bit `i` set iff `dist(p/H, ℤ) ≤ δ_i`
    within: Vec<u64>,
}

impl AxisTable {
    fn new(lo: i64, hi: i64, inv_h: i64, deltas: &[Frac]) -> Self {
        let within = (lo..=hi)
            .map(|p| {
                let r = p.rem_euclid(inv_h);
                let dist = r.min(inv_h - r) as i128; // H · dist(p/H, ℤ)
                deltas
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| dist * d.den <= d.num * inv_h as i128)
                    .fold(0u64, |acc, (i, _)| acc | (1 << i))
            })
            .collect();
        Self { lo, within }
    }
}

/// Literal level test on per-coordinate masks.
fn literal_level(masks: &[u64], m: usize) -> usize {
    let count = |i: usize| masks.iter().filter(|&&w| w & (1 << i) != 0).count();
    let member = |k: usize| count(k) >= m - k && (0..k).all(|i| count(i) < m - i);
    let mut found = None;
    for k in 0..=m {
        if member(k) {
            debug_assert!(found.is_none(), "levels overlap");
            found.get_or_insert(k);
        }
    }
    found.expect("levels cover the space")
}

struct Sweep {
    grid: GridSpec,
    axes: Vec<AxisTable>,
    m: usize,
}

impl Sweep {
    fn new<S: Scalar>(grid: &GridSpec, spec: &PartitionSpec<S>) -> Result<Self> {
        if grid.dim() != spec.m() {
            return Err(Error::Dimension {
                expected: spec.m(),
                got: grid.dim(),
            });
        }
        let deltas = fractions(spec)?;
        let axes = (0..grid.dim())
            .map(|a| AxisTable::new(grid.lo[a], grid.hi[a], grid.inv_h, &deltas))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            axes,
            m: spec.m(),
        })
    }

    fn len(&self) -> usize {
        self.grid.point_count() as usize
    }

    /// Grid coordinates of flat index `idx`, axis 0 varying slowest.
    fn coords(&self, mut idx: usize, out: &mut [i64]) {
        for a in (0..self.m).rev() {
            let n = self.grid.extent(a);
            out[a] = self.grid.lo[a] + (idx % n) as i64;
            idx /= n;
        }
    }

    fn level_at(&self, p: &[i64], masks: &mut [u64]) -> usize {
        for (a, &v) in p.iter().enumerate() {
            masks[a] = self.axes[a].within[(v - self.axes[a].lo) as usize];
        }
        literal_level(masks, self.m)
    }

    fn levels(&self) -> Vec<u8> {
        let mut p = vec![0; self.m];
        let mut masks = vec![0; self.m];
        (0..self.len())
            .map(|idx| {
                self.coords(idx, &mut p);
                self.level_at(&p, &mut masks) as u8
            })
            .collect()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.m];
        for a in (0..self.m.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.grid.extent(a + 1);
        }
        s
    }

    /// Connected components of equal level under axis adjacency.
    fn components(&self, levels: &[u8]) -> (Vec<u32>, usize) {
        const UNSET: u32 = u32::MAX;
        let strides = self.strides();
        let mut labels = vec![UNSET; levels.len()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        let mut p = vec![0; self.m];
        for start in 0..levels.len() {
            if labels[start] != UNSET {
                continue;
            }
            labels[start] = next;
            queue.push_back(start);
            while let Some(idx) = queue.pop_front() {
                self.coords(idx, &mut p);
                for a in 0..self.m {
                    let off = (p[a] - self.grid.lo[a]) as usize;
                    let mut visit = |n: usize| {
                        if labels[n] == UNSET && levels[n] == levels[idx] {
                            labels[n] = next;
                            queue.push_back(n);
                        }
                    };
                    if off > 0 {
                        visit(idx - strides[a]);
                    }
                    if off + 1 < self.grid.extent(a) {
                        visit(idx + strides[a]);
                    }
                }
            }
            next += 1;
        }
        (labels, next as usize)
    }
}

fn scalar_dist_to_integers(v: &BigRational) -> BigRational {
    let frac = v - v.floor();
    let up = BigRational::from_integer(1.into()) - &frac;
    if frac <= up {
        frac
    } else {
        up
    }
}

/// Raw membership test for `D_level` at an unscaled point.
pub fn grid_membership_oracle<S: Scalar>(x: &[S], level: usize, spec: &PartitionSpec<S>) -> Result<bool> {
    let m = spec.m();
    if x.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: x.len(),
        });
    }
    if level > m {
        return Err(Error::Contract(format!("level {level} exceeds m = {m}")));
    }
    let dists = x
        .iter()
        .enumerate()
        .map(|(index, v)| {
            v.to_rational()
                .map(|r| scalar_dist_to_integers(&r))
                .ok_or(Error::NonFinite { index })
        })
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<BigRational> = spec
        .delta()
        .iter()
        .map(|d| d.to_rational().expect("finite δ"))
        .collect();
    let count = |i: usize| dists.iter().filter(|d| **d <= deltas[i]).count();
    Ok(count(level) >= m - level && (0..level).all(|i| count(i) < m - i))
}

/// What a distance oracle measures against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Colors(ColorSet),
    Cell(CellId),
}

/// An oracle answer `[lo, hi]` with `hi − lo = h`. The true distance lies in `[lo − h, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceInterval {
    pub lo: Exact,
    pub hi: Exact,
    pub h: Exact,
}

impl DistanceInterval {
    /// Whether `value` is consistent with the oracle, i.e. lies in `[lo − h, hi]`.
    pub fn admits(&self, value: &Exact) -> bool {
        *value <= self.hi && *value >= self.lo.clone() - self.h.clone()
    }
}

/// Cell key of a grid point computed from the raw definition.
fn literal_cell_matches(p: &[i64], inv_h: i64, masks: &[u64], level: usize, cid: &CellId) -> bool {
    let mut pi = 0;
    let mut fi = 0;
    for (j, &v) in p.iter().enumerate() {
        let pinned_here = masks[j] & (1 << level) != 0;
        let nearest = (2 * v + inv_h).div_euclid(2 * inv_h);
        let floor = v.div_euclid(inv_h);
        if pinned_here {
            if cid.pinned.get(pi) != Some(&j) || cid.anchors[pi] != nearest {
                return false;
            }
            pi += 1;
        } else {
            if cid.pinned.get(pi) == Some(&j) || cid.origins.get(fi) != Some(&floor) {
                return false;
            }
            fi += 1;
        }
    }
    true
}

/// Brute-force max-norm distance from an unscaled point to a color union or a cell.
///
/// The sweep covers `x ± (1/2 + 2h)` for color targets (every color class is
/// within `1/2` of every point) and the cell's bounding box for cell targets.
pub fn grid_distance_oracle(
    x: &[Exact],
    target: &Target,
    inv_h: i64,
    spec: &PartitionSpec<Exact>,
) -> Result<DistanceInterval> {
    let m = spec.m();
    if m > MAX_EXHAUSTIVE_DIM {
        return Err(Error::Unsupported(format!(
            "grid oracle needs m ≤ {MAX_EXHAUSTIVE_DIM}"
        )));
    }
    if x.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: x.len(),
        });
    }
    let q = |n: i64, d: i64| <Exact as Scalar>::ratio(n, d);
    let grid = match target {
        Target::Colors(set) => {
            set.check(m)?;
            let r = q(1, 2) + q(2, inv_h);
            let lo: Vec<Exact> = x.iter().map(|v| v - &r).collect();
            let hi: Vec<Exact> = x.iter().map(|v| v + &r).collect();
            GridSpec::covering(inv_h, &lo, &hi)?
        }
        Target::Cell(cid) => {
            cid.check(m)?;
            let dk = spec.delta()[cid.level].clone();
            let ints = cid.integers();
            let mut lo = Vec::with_capacity(m);
            let mut hi = Vec::with_capacity(m);
            let mut pi = 0;
            for (j, &z) in ints.iter().enumerate() {
                let z = q(z, 1);
                if cid.pinned.get(pi) == Some(&j) {
                    pi += 1;
                    lo.push(z.clone() - dk.clone());
                    hi.push(z + dk.clone());
                } else {
                    lo.push(z.clone());
                    hi.push(z + q(1, 1));
                }
            }
            GridSpec::covering(inv_h, &lo, &hi)?
        }
    };
    let sweep = Sweep::new(&grid, spec)?;
    let reach = grid
        .lo
        .iter()
        .chain(&grid.hi)
        .map(|v| v.unsigned_abs())
        .max()
        .unwrap_or(0);
    let frame = integer_frame(x, inv_h, reach);
    let mut p = vec![0; m];
    let mut masks = vec![0; m];
    let mut best: Option<(i128, Vec<i64>)> = None;
    let mut best_exact: Option<(Exact, Vec<i64>)> = None;
    for idx in 0..sweep.len() {
        sweep.coords(idx, &mut p);
        let level = sweep.level_at(&p, &mut masks);
        let inside = match target {
            Target::Colors(set) => set.contains(level + 1),
            Target::Cell(cid) => level == cid.level && literal_cell_matches(&p, inv_h, &masks, level, cid),
        };
        if !inside {
            continue;
        }
        match &frame {
            Some((nums, den)) => {
                let key = p
                    .iter()
                    .zip(nums)
                    .map(|(&v, &n)| (n - v as i128 * den).abs())
                    .max()
                    .unwrap_or(0);
                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                    best = Some((key, p.clone()));
                }
            }
            None => {
                let d = exact_distance(x, &p, inv_h);
                if best_exact.as_ref().is_none_or(|(b, _)| d < *b) {
                    best_exact = Some((d, p.clone()));
                }
            }
        }
    }
    let point = match (best, best_exact) {
        (Some((_, p)), _) | (None, Some((_, p))) => p,
        (None, None) => return Err(Error::Grid(GridFlag::EmptyTarget)),
    };
    let hi = exact_distance(x, &point, inv_h);
    let h = q(1, inv_h);
    Ok(DistanceInterval {
        lo: hi.clone() - h.clone(),
        hi,
        h,
    })
}

/// `x·H` as integers over a common denominator `D`, so that
/// `|x_j − p/H| = |n_j − p·D| / (D·H)`. `None` when `|p| ≤ reach` could overflow.
fn integer_frame(x: &[Exact], inv_h: i64, reach: u64) -> Option<(Vec<i128>, i128)> {
    let den = x.iter().fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
    let h = BigInt::from(inv_h);
    let nums = x
        .iter()
        .map(|v| (v.numer() * (&den / v.denom()) * &h).to_i128())
        .collect::<Option<Vec<_>>>()?;
    let den = den.to_i128()?;
    let half = i128::MAX / 2;
    let span = nums.iter().map(|n| n.abs()).max().unwrap_or(0);
    let fits = span < half && (reach as i128).checked_mul(den).is_some_and(|v| v < half);
    fits.then_some((nums, den))
}

fn exact_distance(x: &[Exact], p: &[i64], inv_h: i64) -> Exact {
    x.iter()
        .zip(p)
        .map(|(v, &g)| (v - <Exact as Scalar>::ratio(g, inv_h)).abs())
        .fold(Exact::zero(), |a, b| if a >= b { a } else { b })
}

/// `min` along one axis over the forward window `[i, i + span]`, in place.
fn forward_window_min(data: &mut [u32], dims: &[usize], axis: usize, span: usize) {
    let n = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut line = vec![0u32; n];
    let mut deque: VecDeque<usize> = VecDeque::with_capacity(n);
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[base + i * stride];
            }
            deque.clear();
            // sweep right to left so the window [i, i+span] is ready at i
            for i in (0..n).rev() {
                while deque.back().is_some_and(|&b| line[b] >= line[i]) {
                    deque.pop_back();
                }
                deque.push_back(i);
                while deque.front().is_some_and(|&f| f > i + span) {
                    deque.pop_front();
                }
                data[base + i * stride] = line[*deque.front().expect("nonempty")];
            }
        }
    }
}

/// Minimum grid distance between two distinct components of color `color`, minus `h`.
pub fn estimate_separation(color: usize, grid: &GridSpec, spec: &PartitionSpec<Exact>) -> Result<Exact> {
    let m = spec.m();
    if m > MAX_EXHAUSTIVE_DIM {
        return Err(Error::Unsupported(format!(
            "exhaustive mode needs m ≤ {MAX_EXHAUSTIVE_DIM}"
        )));
    }
    if color == 0 || color > m + 1 {
        return Err(Error::Contract(format!("color {color} outside 1..={}", m + 1)));
    }
    let sweep = Sweep::new(grid, spec)?;
    let levels = sweep.levels();
    let (labels, _) = sweep.components(&levels);
    let level = (color - 1) as u8;
    let dims: Vec<usize> = (0..m).map(|a| grid.extent(a)).collect();
    let mut ids: Vec<u32> = labels
        .iter()
        .zip(&levels)
        .filter(|(_, &l)| l == level)
        .map(|(&c, _)| c)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::Grid(GridFlag::NoPair));
    }
    const NONE: u32 = u32::MAX;
    // min over window of label, and min over window of (NONE - label) for the max
    let low: Vec<u32> = labels
        .iter()
        .zip(&levels)
        .map(|(&c, &l)| if l == level { c } else { NONE })
        .collect();
    let high: Vec<u32> = low
        .iter()
        .map(|&c| if c == NONE { NONE } else { NONE - 1 - c })
        .collect();
    let overlap = |span: usize| -> bool {
        let mut a = low.clone();
        let mut b = high.clone();
        for axis in 0..m {
            forward_window_min(&mut a, &dims, axis, span);
            forward_window_min(&mut b, &dims, axis, span);
        }
        a.iter()
            .zip(&b)
            .any(|(&mn, &mx)| mn != NONE && mx != NONE && mn != NONE - 1 - mx)
    };
    let max_span = dims.iter().copied().max().unwrap_or(1);
    if !overlap(max_span) {
        return Err(Error::Grid(GridFlag::NoPair));
    }
    let (mut lo, mut hi) = (1usize, max_span);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if overlap(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(<Exact as Scalar>::ratio(lo as i64 - 1, grid.inv_h))
}

/// Per-component Chebyshev diameter over a grid box, as `(level, diameter)`.
pub fn estimate_diameters(grid: &GridSpec, spec: &PartitionSpec<Exact>) -> Result<Vec<(usize, Exact)>> {
    let m = spec.m();
    if m > MAX_EXHAUSTIVE_DIM {
        return Err(Error::Unsupported(format!(
            "exhaustive mode needs m ≤ {MAX_EXHAUSTIVE_DIM}"
        )));
    }
    let sweep = Sweep::new(grid, spec)?;
    let levels = sweep.levels();
    let (labels, count) = sweep.components(&levels);
    let mut lo = vec![vec![i64::MAX; m]; count];
    let mut hi = vec![vec![i64::MIN; m]; count];
    let mut level_of_comp = vec![0usize; count];
    let mut p = vec![0; m];
    for idx in 0..sweep.len() {
        sweep.coords(idx, &mut p);
        let c = labels[idx] as usize;
        level_of_comp[c] = levels[idx] as usize;
        for a in 0..m {
            lo[c][a] = lo[c][a].min(p[a]);
            hi[c][a] = hi[c][a].max(p[a]);
        }
    }
    Ok((0..count)
        .map(|c| {
            let span = (0..m).map(|a| hi[c][a] - lo[c][a]).max().unwrap_or(0);
            (level_of_comp[c], <Exact as Scalar>::ratio(span, grid.inv_h))
        })
        .collect())
}

/// Chebyshev diameter of the grid points of one cell.
pub fn estimate_diameter(cell: &CellId, inv_h: i64, spec: &PartitionSpec<Exact>) -> Result<Exact> {
    let m = spec.m();
    cell.check(m)?;
    let q = |n: i64, d: i64| <Exact as Scalar>::ratio(n, d);
    let dk = spec.delta()[cell.level].clone();
    let mut pi = 0;
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    for (j, z) in cell.integers().into_iter().enumerate() {
        if cell.pinned.get(pi) == Some(&j) {
            pi += 1;
            lo.push(q(z, 1) - dk.clone());
            hi.push(q(z, 1) + dk.clone());
        } else {
            lo.push(q(z, 1));
            hi.push(q(z + 1, 1));
        }
    }
    let grid = GridSpec::covering(inv_h, &lo, &hi)?;
    let sweep = Sweep::new(&grid, spec)?;
    let mut p = vec![0; m];
    let mut masks = vec![0; m];
    let mut min = vec![i64::MAX; m];
    let mut max = vec![i64::MIN; m];
    let mut any = false;
    for idx in 0..sweep.len() {
        sweep.coords(idx, &mut p);
        let level = sweep.level_at(&p, &mut masks);
        if level == cell.level && literal_cell_matches(&p, inv_h, &masks, level, cell) {
            any = true;
            for a in 0..m {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
    }
    if !any {
        return Err(Error::Grid(GridFlag::EmptyCell));
    }
    let span = (0..m).map(|a| max[a] - min[a]).max().unwrap_or(0);
    Ok(q(span, inv_h))
}

/// Analytic per-level diameter bound `max(1 − 2δ_{k−1}, 2δ_k)` (just `2δ_0` at level 0).
pub fn analytic_diameter_bound<S: Scalar>(level: usize, spec: &PartitionSpec<S>) -> S {
    let d = spec.delta();
    let pinned = S::from_i64(2) * d[level].clone();
    let bound = if level == spec.m() { S::zero() } else { pinned };
    if level == 0 {
        bound
    } else {
        crate::scalar::max_of(bound, S::one() - S::from_i64(2) * d[level - 1].clone())
    }
}

/// The validated spec and the separation estimate per color (`None` when no pair fits the grid).
pub type SeparationCheck = (PartitionSpec<Exact>, Vec<(usize, Option<Exact>)>);

/// Separation check for every color; shrinks `c` by halving until it fits all estimates.
pub fn validate_separation(spec: &PartitionSpec<Exact>, grid: &GridSpec) -> Result<SeparationCheck> {
    let mut estimates = Vec::new();
    let mut floor: Option<Exact> = None;
    for color in 1..=spec.colors() {
        match estimate_separation(color, grid, spec) {
            Ok(est) => {
                floor = Some(match floor {
                    Some(f) if f <= est => f,
                    _ => est.clone(),
                });
                estimates.push((color, Some(est)));
            }
            Err(Error::Grid(GridFlag::NoPair)) => estimates.push((color, None)),
            Err(e) => return Err(e),
        }
    }
    let mut c = spec.c().clone();
    if let Some(f) = floor {
        if f <= Exact::zero() {
            return Err(Error::InvalidSpec("measured separation is not positive".into()));
        }
        while c > f {
            c /= <Exact as Scalar>::from_i64(2);
        }
    }
    Ok((spec.with_separation(c)?, estimates))
}

/// Independent route to level distances: scan the breakpoints `|d_j − δ_i|`
/// in increasing order and return the first at which the greedy band
/// placement is feasible.
pub fn band_feasibility_distance(y: &[Exact], level: usize, spec: &PartitionSpec<Exact>) -> Result<Exact> {
    let m = spec.m();
    if y.len() != m || level > m {
        return Err(Error::Contract("bad arguments".into()));
    }
    let delta = spec.delta();
    let half = <Exact as Scalar>::ratio(1, 2);
    let d: Vec<Exact> = y.iter().map(scalar_dist_to_integers).collect();
    let mut breaks: Vec<Exact> = vec![Exact::zero()];
    for dj in &d {
        for di in delta {
            breaks.push((dj - di).abs());
        }
    }
    breaks.sort();
    breaks.dedup();
    let feasible = |rho: &Exact| -> bool {
        let lo: Vec<Exact> = d.iter().map(|dj| (dj - rho).max(Exact::zero())).collect();
        let hi: Vec<Exact> = d.iter().map(|dj| (dj + rho).min(half.clone())).collect();
        let mut eligible: Vec<usize> = (0..m).filter(|&j| lo[j] <= delta[level]).collect();
        if eligible.len() < m - level {
            return false;
        }
        eligible.sort_by(|&a, &b| hi[a].cmp(&hi[b]));
        let small: Vec<usize> = eligible[..m - level].to_vec();
        let rest: Vec<&Exact> = (0..m).filter(|j| !small.contains(j)).map(|j| &hi[j]).collect();
        (0..level).all(|i| rest.iter().filter(|h| ***h < delta[i]).count() <= level - 1 - i)
    };
    breaks
        .into_iter()
        .find(|rho| feasible(rho))
        .ok_or_else(|| Error::Contract("no feasible breakpoint".into()))
}

/// Independent route to single-cell distances by breakpoint search.
pub fn band_feasibility_cell_distance(y: &[Exact], cid: &CellId, spec: &PartitionSpec<Exact>) -> Result<Exact> {
    let m = spec.m();
    cid.check(m)?;
    let delta = spec.delta();
    let k = cid.level;
    let half = <Exact as Scalar>::ratio(1, 2);
    let q = |n: i64| <Exact as Scalar>::from_i64(n);
    let pinned_off: Vec<Exact> = cid
        .pinned
        .iter()
        .zip(&cid.anchors)
        .map(|(&j, &a)| (&y[j] - q(a)).abs() - &delta[k])
        .collect();
    let centre_off: Vec<Exact> = cid
        .free()
        .iter()
        .zip(&cid.origins)
        .map(|(&j, &o)| (&y[j] - q(o) - &half).abs())
        .collect();
    let mut breaks = vec![Exact::zero()];
    breaks.extend(pinned_off.iter().cloned());
    for u in &centre_off {
        for di in &delta[..k] {
            breaks.push(u - &half + di);
        }
    }
    breaks.retain(|b| *b >= Exact::zero());
    breaks.sort();
    breaks.dedup();
    let feasible = |rho: &Exact| -> bool {
        if pinned_off.iter().any(|o| o > rho) {
            return false;
        }
        let hi: Vec<Exact> = centre_off.iter().map(|u| (&half - u + rho).min(half.clone())).collect();
        (0..k).all(|i| hi.iter().filter(|h| **h < delta[i]).count() <= k - 1 - i)
    };
    breaks
        .into_iter()
        .find(|rho| feasible(rho))
        .ok_or_else(|| Error::Contract("no feasible breakpoint".into()))
}

/// Max of `|f(x) − f(y)| / ‖x − y‖_∞` over sampled pairs.
///
/// `sample` draws the first point; the second is a perturbation whose size is
/// log-uniform in `[10⁻⁴, 1]` times `scale`.
pub fn check_lipschitz<S, F, P>(f: F, mut sample: P, scale: f64, pairs: usize, seed: u64) -> Result<S>
where
    S: Scalar,
    F: Fn(&[S]) -> Result<S>,
    P: FnMut(&mut ChaCha8Rng) -> Vec<S>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = S::zero();
    for _ in 0..pairs {
        let x = sample(&mut rng);
        let y = perturb(&x, scale, &mut rng);
        let ratio = lipschitz_ratio(&f(&x)?, &f(&y)?, &x, &y);
        if ratio > worst {
            worst = ratio;
        }
    }
    Ok(worst)
}

fn perturb<S: Scalar>(x: &[S], scale: f64, rng: &mut ChaCha8Rng) -> Vec<S> {
    let size = scale * 10f64.powf(rng.random_range(-4.0..=0.0));
    x.iter()
        .map(|v| v.clone() + S::from_f64(size * rng.random_range(-1.0..=1.0)).expect("finite"))
        .collect()
}

fn lipschitz_ratio<S: Scalar>(fx: &S, fy: &S, x: &[S], y: &[S]) -> S {
    let dx = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a.clone() - b.clone()).abs())
        .fold(S::zero(), crate::scalar::max_of);
    if dx <= S::zero() {
        return S::zero();
    }
    (fx.clone() - fy.clone()).abs() / dx
}

/// Worst observed ratio per descriptor.
#[derive(Clone, Debug)]
pub struct LipschitzEntry<S> {
    pub descriptor: MeasurementDescriptor,
    pub max_ratio: S,
    pub pairs: usize,
}

/// Lipschitz sweep over every nonempty color set and every separating functional.
///
/// Color-set functionals share one level-distance evaluation per point; the
/// separating functionals are sampled near low-index cells so their positive
/// part is exercised.
pub fn lipschitz_sweep<S: Scalar>(spec: &PartitionSpec<S>, pairs: usize, seed: u64) -> Result<Vec<LipschitzEntry<S>>> {
    let m = spec.m();
    let colors = m + 1;
    let subsets = (1u64 << colors) - 1;
    let eps = spec.eps().clone();
    let eps_f = eps.to_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_sets = vec![S::zero(); subsets as usize];
    let mut worst_sep = vec![S::zero(); colors];
    let c = spec.c().to_f64();
    for t in 0..pairs {
        // alternate broad points and points hugging low-index cells
        let x: Vec<S> = if t % 2 == 0 {
            (0..m)
                .map(|_| S::from_f64(rng.random_range(-3.0..3.0) * eps_f).expect("finite"))
                .collect()
        } else {
            let color = rng.random_range(1..=colors);
            let code = rng.random_range(1u32..=64);
            let cid = crate::partition::decode_cell(&num_bigint::BigUint::from(code), color, spec)?;
            let centre = crate::partition::representative(&cid, spec)?;
            centre
                .into_iter()
                .map(|v| v + S::from_f64(rng.random_range(-0.6..0.6) * c * eps_f).expect("finite"))
                .collect()
        };
        let y = perturb(&x, c * eps_f, &mut rng);
        let step = crate::recovery::max_norm_distance(&x, &y);
        if step <= S::zero() {
            continue;
        }
        let (ux, uy) = (spec.unscale(&x)?, spec.unscale(&y)?);
        let unscaled_step = step.clone() / eps.clone();
        let lx = dist_to_levels_unscaled(&ux, spec)?;
        let ly = dist_to_levels_unscaled(&uy, spec)?;
        for mask in 1..=subsets {
            let pick = |l: &[S]| {
                (0..colors)
                    .filter(|r| mask & (1 << r) != 0)
                    .map(|r| l[r].clone())
                    .reduce(crate::scalar::min_of)
                    .expect("nonempty")
            };
            let ratio = (pick(&lx) - pick(&ly)).abs() / unscaled_step.clone();
            let slot = &mut worst_sets[(mask - 1) as usize];
            if ratio > *slot {
                *slot = ratio;
            }
        }
        for color in 1..=colors {
            let d = MeasurementDescriptor::separating(color);
            let ratio = (evaluate_unscaled(&d, &ux, spec)? - evaluate_unscaled(&d, &uy, spec)?).abs() / step.clone();
            if ratio > worst_sep[color - 1] {
                worst_sep[color - 1] = ratio;
            }
        }
    }
    let mut out = Vec::with_capacity(subsets as usize + colors);
    for mask in 1..=subsets {
        let set = ColorSet::new((0..colors).filter(|r| mask & (1 << r) != 0).map(|r| r + 1))?;
        out.push(LipschitzEntry {
            descriptor: MeasurementDescriptor::ColorDistance(set),
            max_ratio: worst_sets[(mask - 1) as usize].clone(),
            pairs,
        });
    }
    for color in 1..=colors {
        out.push(LipschitzEntry {
            descriptor: MeasurementDescriptor::separating(color),
            max_ratio: worst_sep[color - 1].clone(),
            pairs,
        });
    }
    Ok(out)
}

/// One line of a validation report.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationRow {
    pub operation: String,
    pub instance: String,
    pub oracle: String,
    pub module_value: String,
    pub pass: bool,
}

impl ValidationRow {
    fn new(operation: &str, instance: String, oracle: String, module_value: String, pass: bool) -> Self {
        Self {
            operation: operation.to_string(),
            instance,
            oracle,
            module_value,
            pass,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// The spec with `c` validated (possibly shrunk).
    pub spec: PartitionSpec<Exact>,
    pub exhaustive: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub inv_h: Option<i64>,
    pub distance_queries: usize,
    pub membership_points: usize,
    pub lipschitz_pairs: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            inv_h: None,
            distance_queries: 200,
            membership_points: 100_000,
            lipschitz_pairs: 10_000,
            seed: 1,
        }
    }
}

fn fmt_point(x: &[Exact]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn random_rational_point(m: usize, lo: i64, hi: i64, den: i64, rng: &mut ChaCha8Rng) -> Vec<Exact> {
    (0..m)
        .map(|_| <Exact as Scalar>::ratio(rng.random_range(lo * den..=hi * den), den))
        .collect()
}

fn membership_rows(spec: &PartitionSpec<Exact>, points: usize, rng: &mut ChaCha8Rng) -> Result<ValidationRow> {
    let m = spec.m();
    let mut mismatches = 0usize;
    for _ in 0..points {
        let x = random_rational_point(m, -5, 5, 1000, rng);
        let level = level_of(&x, spec)?;
        let hits: Vec<usize> = (0..=m)
            .filter(|&k| grid_membership_oracle(&x, k, spec).unwrap_or(false))
            .collect();
        if hits != [level] {
            mismatches += 1;
        }
    }
    Ok(ValidationRow::new(
        "level_of",
        format!("{points} random points"),
        "counting definition".into(),
        format!("{mismatches} mismatches"),
        mismatches == 0,
    ))
}

/// Exhaustive grid validation for `m ≤ 3`.
pub fn run_exhaustive_validation(spec: &PartitionSpec<Exact>, opts: &ValidationOptions) -> Result<ValidationReport> {
    let m = spec.m();
    if m > MAX_EXHAUSTIVE_DIM {
        return Err(Error::Unsupported(format!(
            "exhaustive validation needs m ≤ {MAX_EXHAUSTIVE_DIM}, got {m}"
        )));
    }
    let unit = spec.with_eps(<Exact as Scalar>::one())?;
    let inv_h = opts.inv_h.unwrap_or_else(|| default_resolution(m));
    let grid = GridSpec::default_box(m)?.with_resolution(inv_h)?;
    let h = grid.h();
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let (validated, estimates) = validate_separation(&unit, &grid)?;
    let c = validated.c().clone();
    for (color, est) in &estimates {
        match est {
            Some(e) => rows.push(ValidationRow::new(
                "estimate_separation",
                format!("m={m} color={color} h={h}"),
                e.to_string(),
                format!("c={c}"),
                *e >= c && c > Exact::zero(),
            )),
            None => rows.push(ValidationRow::new(
                "estimate_separation",
                format!("m={m} color={color} h={h}"),
                "no pair in box".into(),
                format!("c={c}"),
                true,
            )),
        }
    }

    let diameters = estimate_diameters(&grid, &unit)?;
    for level in 0..=m {
        let worst = diameters
            .iter()
            .filter(|(l, _)| *l == level)
            .map(|(_, d)| d.clone())
            .max();
        let bound = analytic_diameter_bound(level, &unit);
        if let Some(worst) = worst {
            rows.push(ValidationRow::new(
                "estimate_diameter",
                format!("m={m} level={level} h={h}"),
                worst.to_string(),
                format!("bound={bound}"),
                worst <= <Exact as Scalar>::one() && worst <= bound,
            ));
        }
    }

    for _ in 0..opts.distance_queries {
        let x = random_rational_point(m, -1, 2, 997, &mut rng);
        let size = rng.random_range(1..=m + 1);
        let mut colors: Vec<usize> = (1..=m + 1).collect();
        for i in 0..colors.len() {
            let j = rng.random_range(i..colors.len());
            colors.swap(i, j);
        }
        let set = ColorSet::new(colors[..size].iter().copied())?;
        let interval = grid_distance_oracle(&x, &Target::Colors(set.clone()), inv_h, &unit)?;
        let value = crate::partition::dist_to_colors(&x, &set, &unit)?;
        rows.push(ValidationRow::new(
            "dist_to_colors",
            format!("x=[{}] J={:?}", fmt_point(&x), set.colors()),
            format!("[{}, {}]", interval.lo, interval.hi),
            value.to_string(),
            interval.admits(&value),
        ));
    }
    for _ in 0..opts.distance_queries {
        let x = random_rational_point(m, -1, 2, 997, &mut rng);
        let anchor = random_rational_point(m, -1, 2, 997, &mut rng);
        let cid = cell_of(&anchor, &unit)?;
        let interval = grid_distance_oracle(&x, &Target::Cell(cid.clone()), inv_h, &unit)?;
        let value = crate::partition::dist_to_cell(&x, &cid, &unit)?;
        rows.push(ValidationRow::new(
            "dist_to_cell",
            format!("x=[{}] cell={cid:?}", fmt_point(&x)),
            format!("[{}, {}]", interval.lo, interval.hi),
            value.to_string(),
            interval.admits(&value),
        ));
    }

    rows.push(membership_rows(&unit, opts.membership_points, &mut rng)?);
    rows.extend(lipschitz_rows(&validated, opts)?);
    Ok(ValidationReport {
        rows,
        spec: validated.with_eps(spec.eps().clone())?,
        exhaustive: true,
    })
}

fn lipschitz_rows(spec: &PartitionSpec<Exact>, opts: &ValidationOptions) -> Result<Vec<ValidationRow>> {
    let one = <Exact as Scalar>::one();
    Ok(lipschitz_sweep(spec, opts.lipschitz_pairs, opts.seed ^ 0x5eed)?
        .into_iter()
        .map(|e| {
            ValidationRow::new(
                "check_lipschitz",
                format!("{:?}", e.descriptor),
                format!("{} pairs", e.pairs),
                e.max_ratio.to_string(),
                e.max_ratio <= one,
            )
        })
        .collect())
}

/// Sampling-based validation for any `m` (used when the grid is out of reach).
pub fn run_fuzz_validation(spec: &PartitionSpec<Exact>, opts: &ValidationOptions) -> Result<ValidationReport> {
    let m = spec.m();
    let unit = spec.with_eps(<Exact as Scalar>::one())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = vec![membership_rows(&unit, opts.membership_points, &mut rng)?];
    let c = unit.c().clone();
    let one = <Exact as Scalar>::one();

    // close pairs: same cell ⇒ within 1, same color different cell ⇒ at least c
    let mut diam_bad = 0usize;
    let mut sep_bad = 0usize;
    let pairs = opts.membership_points;
    for _ in 0..pairs {
        let x = random_rational_point(m, -3, 3, 1009, &mut rng);
        let r = rng.random_range(1..=4) as i64;
        let y: Vec<Exact> = x
            .iter()
            .map(|v| v + <Exact as Scalar>::ratio(rng.random_range(-1000 * r..=1000 * r), 2000))
            .collect();
        let (cx, cy) = (cell_of(&x, &unit)?, cell_of(&y, &unit)?);
        let dist = crate::recovery::max_norm_distance(&x, &y);
        if cx == cy && dist > one {
            diam_bad += 1;
        }
        if cx != cy && cx.level == cy.level && dist < c {
            sep_bad += 1;
        }
    }
    rows.push(ValidationRow::new(
        "diameter_fuzz",
        format!("{pairs} close pairs"),
        "≤ 1".into(),
        format!("{diam_bad} violations"),
        diam_bad == 0,
    ));
    rows.push(ValidationRow::new(
        "separation_fuzz",
        format!("{pairs} close pairs"),
        format!("≥ {c}"),
        format!("{sep_bad} violations"),
        sep_bad == 0,
    ));

    for _ in 0..opts.distance_queries {
        let y = random_rational_point(m, -2, 2, 997, &mut rng);
        let levels = dist_to_levels_unscaled(&y, &unit)?;
        let mut ok = true;
        for (k, v) in levels.iter().enumerate() {
            ok &= band_feasibility_distance(&y, k, &unit)? == *v;
        }
        let anchor = random_rational_point(m, -2, 2, 997, &mut rng);
        let cid = cell_of(&anchor, &unit)?;
        let cell_ok = band_feasibility_cell_distance(&y, &cid, &unit)? == dist_to_cell_unscaled(&y, &cid, &unit)?;
        rows.push(ValidationRow::new(
            "distance_routes",
            format!("y=[{}]", fmt_point(&y)),
            "breakpoint search".into(),
            "closed form".into(),
            ok && cell_ok,
        ));
    }
    rows.extend(lipschitz_rows(&unit, opts)?);
    Ok(ValidationReport {
        rows,
        spec: spec.clone(),
        exhaustive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::dist_to_colors;

    fn q(n: i64, d: i64) -> Exact {
        <Exact as Scalar>::ratio(n, d)
    }

    fn spec(m: usize) -> PartitionSpec<Exact> {
        PartitionSpec::new(m, q(1, 1)).unwrap()
    }

    #[test]
    fn membership_examples() {
        let s = spec(2);
        assert!(grid_membership_oracle(&[q(0, 1), q(0, 1)], 0, &s).unwrap());
        assert!(grid_membership_oracle(&[q(1, 10), q(1, 2)], 1, &s).unwrap());
        assert!(!grid_membership_oracle(&[q(1, 10), q(1, 2)], 0, &s).unwrap());
        assert!(grid_membership_oracle(&[q(1, 2), q(1, 2)], 2, &s).unwrap());
    }

    #[test]
    fn one_dimensional_distance_oracle() {
        let s = spec(1);
        let iv = grid_distance_oracle(&[q(1, 2)], &Target::Colors(ColorSet::new([1]).unwrap()), 10_000, &s).unwrap();
        assert!(iv.admits(&q(1, 6)), "{iv:?}");
        let iv = grid_distance_oracle(&[q(0, 1)], &Target::Colors(ColorSet::new([2]).unwrap()), 10_000, &s).unwrap();
        assert!(iv.admits(&q(1, 3)), "{iv:?}");
        let cell0 = CellId {
            level: 0,
            pinned: vec![0],
            anchors: vec![0],
            origins: vec![],
        };
        let iv = grid_distance_oracle(&[q(1, 2)], &Target::Cell(cell0), 10_000, &s).unwrap();
        assert!(iv.admits(&q(1, 6)), "{iv:?}");
    }

    #[test]
    fn inside_target_contains_zero() {
        let s = spec(2);
        let x = vec![q(3, 10), q(-1, 7)];
        let color = level_of(&x, &s).unwrap() + 1;
        let iv = grid_distance_oracle(&x, &Target::Colors(ColorSet::new([color]).unwrap()), 200, &s).unwrap();
        assert!(iv.admits(&q(0, 1)));
    }

    #[test]
    fn refining_the_grid_tightens_the_interval() {
        let s = spec(2);
        let x = vec![q(37, 100), q(123, 1000)];
        let t = Target::Colors(ColorSet::new([3]).unwrap());
        let mut last: Option<DistanceInterval> = None;
        for inv_h in [50, 100, 200, 400] {
            let iv = grid_distance_oracle(&x, &t, inv_h, &s).unwrap();
            if let Some(prev) = &last {
                assert!(iv.hi <= prev.hi);
                assert!(iv.h < prev.h);
            }
            last = Some(iv);
        }
    }

    #[test]
    fn separation_estimates() {
        let s2 = spec(2);
        let grid = GridSpec::default_box(2).unwrap().with_resolution(200).unwrap();
        let est = estimate_separation(3, &grid, &s2).unwrap();
        assert!(est >= q(1, 8) - grid.h(), "{est}");
        let s1 = spec(1);
        let grid1 = GridSpec::default_box(1).unwrap();
        let est = estimate_separation(1, &grid1, &s1).unwrap();
        // 1 − 2δ_0 = 1/3, observed on the grid within a step
        assert!((est - q(1, 3)).abs() <= grid1.h() * q(2, 1));
    }

    #[test]
    fn single_cell_box_has_no_pair() {
        let s = spec(2);
        let grid = GridSpec::cube(2, 100, q(-1, 5), q(1, 5)).unwrap();
        assert_eq!(estimate_separation(1, &grid, &s), Err(Error::Grid(GridFlag::NoPair)));
    }

    #[test]
    fn diameter_estimates() {
        let s1 = spec(1);
        let band = CellId {
            level: 1,
            pinned: vec![],
            anchors: vec![],
            origins: vec![0],
        };
        let d = estimate_diameter(&band, 3000, &s1).unwrap();
        assert!((d - q(1, 3)).abs() <= q(2, 3000));
        let s2 = spec(2);
        let square = CellId {
            level: 0,
            pinned: vec![0, 1],
            anchors: vec![1, -2],
            origins: vec![],
        };
        assert_eq!(estimate_diameter(&square, 1000, &s2).unwrap(), q(3, 4));
    }

    #[test]
    fn components_match_cell_ids() {
        let s = spec(2);
        let grid = GridSpec::default_box(2).unwrap().with_resolution(100).unwrap();
        let sweep = Sweep::new(&grid, &s).unwrap();
        let levels = sweep.levels();
        let (labels, count) = sweep.components(&levels);
        let mut pairs = std::collections::HashSet::new();
        let mut p = vec![0; 2];
        for (idx, &label) in labels.iter().enumerate().take(sweep.len()) {
            sweep.coords(idx, &mut p);
            let x: Vec<Exact> = p.iter().map(|&v| q(v, 100)).collect();
            pairs.insert((label, cell_of(&x, &s).unwrap()));
        }
        // one-to-one: each component is exactly one cell id
        assert_eq!(pairs.len(), count);
        let cells: std::collections::HashSet<_> = pairs.iter().map(|(_, c)| c.clone()).collect();
        assert_eq!(cells.len(), count);
    }

    #[test]
    fn breakpoint_route_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in 1..=6 {
            let s = spec(m);
            for _ in 0..300 {
                let y = random_rational_point(m, -3, 3, 101, &mut rng);
                let levels = dist_to_levels_unscaled(&y, &s).unwrap();
                for (k, v) in levels.iter().enumerate() {
                    assert_eq!(band_feasibility_distance(&y, k, &s).unwrap(), *v, "m={m} k={k} y={y:?}");
                }
                let cid = cell_of(&random_rational_point(m, -2, 2, 7, &mut rng), &s).unwrap();
                assert_eq!(
                    band_feasibility_cell_distance(&y, &cid, &s).unwrap(),
                    dist_to_cell_unscaled(&y, &cid, &s).unwrap()
                );
            }
        }
    }

    #[test]
    fn lipschitz_of_constant_is_zero() {
        let s = spec(2);
        let r: Exact = check_lipschitz(
            |_x: &[Exact]| Ok(q(5, 1)),
            |rng| random_rational_point(2, -1, 1, 10, rng),
            1.0,
            100,
            1,
        )
        .unwrap();
        assert_eq!(r, q(0, 1));
        let d = MeasurementDescriptor::colors([1, 3]).unwrap();
        let r = check_lipschitz(
            |x: &[Exact]| crate::measurement::evaluate(&d, x, &s),
            |rng| random_rational_point(2, -2, 2, 1000, rng),
            0.3,
            2000,
            2,
        )
        .unwrap();
        assert!(r <= q(1, 1));
        assert!(r > q(1, 2), "sampler should see slope-1 pieces: {r}");
    }

    #[test]
    fn color_distance_agrees_with_grid_in_two_dimensions() {
        let s = spec(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = random_rational_point(2, -1, 2, 97, &mut rng);
            let set = ColorSet::new([rng.random_range(1..=3)]).unwrap();
            let iv = grid_distance_oracle(&x, &Target::Colors(set.clone()), 400, &s).unwrap();
            let v = dist_to_colors(&x, &set, &s).unwrap();
            assert!(iv.admits(&v), "x={x:?} J={set:?} v={v} iv={iv:?}");
        }
    }

    #[test]
    fn exhaustive_mode_rejects_large_dimensions() {
        let s = spec(4);
        assert!(matches!(
            run_exhaustive_validation(&s, &ValidationOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn analytic_diameters_below_one() {
        for m in 1..12 {
            let s = spec(m);
            for k in 0..=m {
                assert!(analytic_diameter_bound(k, &s) < q(1, 1));
            }
        }
    }
}
