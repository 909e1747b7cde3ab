//! The colored facet partition of ℝ^m.
//!
//! Write `d_j = dist(x_j, ℤ)` and `count(δ) = #{j : d_j ≤ δ}`. For a strictly
//! decreasing schedule `1/2 > δ_0 > … > δ_m > 0` the level of `x` is the
//! smallest `k` with `count(δ_k) ≥ m − k`; level `k` carries color `k + 1`.
//! Inside level `k` exactly `m − k` coordinates sit within `δ_k` of an integer
//! (pinned, with an integer anchor) and the remaining `k` sit in open bands
//! `(o + δ_{k−1}, o + 1 − δ_{k−1})` (free, with an origin `o`), subject to
//! `#{free j : d_j ≤ δ_i} ≤ k − 1 − i` for `i < k − 1`. Each choice of pinned
//! set, anchors and origins is one connected cell.
//!
//! With `e_1 ≤ … ≤ e_m` the sorted `d_j`, the closure of level `k` is
//! `e_{m−k} ≤ δ_k` together with `e_{m−i} ≥ δ_i` for `i < k`. Because every
//! coordinate can move its `d_j` by at most `ρ` within a max-norm ball of
//! radius `ρ`, the distance to that closure is
//! `max(0, e_{m−k} − δ_k, max_{i<k} (δ_i − e_{m−i}))`. Single cells admit the
//! same treatment with the free band depths in place of the `e`'s.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::enumeration::{binomial, pair_all, rank_subset, unpair_all, unrank_subset, unzigzag, zigzag};
use crate::error::{Error, Result};
use crate::scalar::{max_of, min_of, Mode, Scalar};

/// Largest cell index the float64 path will decode.
pub const FLOAT_MAX_CELL_INDEX: u64 = 1 << 40;

/// Relative zero-test tolerance of the float64 path, scaled by `min(1, cε)`.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Dimensions above this are rejected; keeps subset ranks inside `u128`.
pub const MAX_DIMENSION: usize = 120;

/// `δ_k = (m + 1 − k) / (2(m + 2))` for `k = 0..=m`.
pub fn default_delta_schedule<S: Scalar>(m: usize) -> Vec<S> {
    let den = 2 * (m as i64 + 2);
    (0..=m as i64).map(|k| S::ratio(m as i64 + 1 - k, den)).collect()
}

/// `1 / (2(m + 2))`, the gap between consecutive entries of the default schedule.
pub fn conjectured_separation<S: Scalar>(m: usize) -> S {
    S::ratio(1, 2 * (m as i64 + 2))
}

/// A lower bound on the distance between distinct cells of equal color.
///
/// Two such cells differ in a pinned set (gap `δ_{k−1} − δ_k`), in an anchor
/// (gap `1 − 2δ_k ≥ 1 − 2δ_0`) or in an origin (gap `2δ_{k−1} ≥ 2δ_{m−1}`).
pub fn analytic_separation_bound<S: Scalar>(delta: &[S]) -> S {
    let m = delta.len() - 1;
    let mut bound = S::one() - S::from_i64(2) * delta[0].clone();
    bound = min_of(bound, S::from_i64(2) * delta[m - 1].clone());
    for k in 1..m {
        bound = min_of(bound, delta[k - 1].clone() - delta[k].clone());
    }
    bound
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec<S> {
    m: usize,
    delta: Vec<S>,
    c: S,
    eps: S,
}

impl<S: Scalar> PartitionSpec<S> {
    /// Default schedule with the conjectured separation constant.
    pub fn new(m: usize, eps: S) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        let delta = default_delta_schedule(m);
        let mut c = conjectured_separation::<S>(m);
        let bound = analytic_separation_bound(&delta);
        while c > bound {
            c = c / S::from_i64(2);
        }
        Self::with_schedule(m, delta, c, eps)
    }

    pub fn with_schedule(m: usize, delta: Vec<S>, c: S, eps: S) -> Result<Self> {
        if m == 0 || m > MAX_DIMENSION {
            return Err(Error::InvalidSpec(format!("dimension {m} outside 1..={MAX_DIMENSION}")));
        }
        if delta.len() != m + 1 {
            return Err(Error::InvalidSpec(format!(
                "schedule needs {} entries, got {}",
                m + 1,
                delta.len()
            )));
        }
        if delta.iter().any(|d| !d.is_finite()) || !c.is_finite() || !eps.is_finite() {
            return Err(Error::InvalidSpec("non-finite parameter".into()));
        }
        if delta[0] >= S::half() {
            return Err(Error::InvalidSpec("δ_0 must be below 1/2".into()));
        }
        if delta[m] <= S::zero() {
            return Err(Error::InvalidSpec("δ_m must be positive".into()));
        }
        if delta.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidSpec("schedule must strictly decrease".into()));
        }
        if c <= S::zero() {
            return Err(Error::InvalidSpec("separation constant must be positive".into()));
        }
        if c > analytic_separation_bound(&delta) {
            return Err(Error::InvalidSpec(format!(
                "separation constant {c} exceeds the provable bound {}",
                analytic_separation_bound(&delta)
            )));
        }
        if eps <= S::zero() {
            return Err(Error::InvalidSpec("scale ε must be positive".into()));
        }
        Ok(Self { m, delta, c, eps })
    }

    pub fn with_eps(&self, eps: S) -> Result<Self> {
        Self::with_schedule(self.m, self.delta.clone(), self.c.clone(), eps)
    }

    pub fn with_separation(&self, c: S) -> Result<Self> {
        Self::with_schedule(self.m, self.delta.clone(), c, self.eps.clone())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn colors(&self) -> usize {
        self.m + 1
    }

    pub fn delta(&self) -> &[S] {
        &self.delta
    }

    pub fn c(&self) -> &S {
        &self.c
    }

    pub fn eps(&self) -> &S {
        &self.eps
    }

    pub fn mode(&self) -> Mode {
        S::MODE
    }

    /// Zero-test tolerance τ: `0` in exact mode, `1e-9 · min(1, cε)` in float64.
    pub fn tolerance(&self) -> S {
        match S::MODE {
            Mode::Exact => S::zero(),
            Mode::Float64 => {
                let ce = self.c.to_f64() * self.eps.to_f64();
                S::from_f64(FLOAT_TOLERANCE * ce.min(1.0)).unwrap_or_else(S::zero)
            }
        }
    }

    /// Largest cell index decodable in this arithmetic mode.
    pub fn max_cell_index(&self) -> Option<u64> {
        match S::MODE {
            Mode::Exact => None,
            Mode::Float64 => Some(FLOAT_MAX_CELL_INDEX),
        }
    }

    fn check_point(&self, x: &[S]) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }

    /// `x / ε`, validated.
    pub fn unscale(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_point(x)?;
        Ok(x.iter().map(|v| v.clone() / self.eps.clone()).collect())
    }
}

/// A nonempty subset of `{1, …, m+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ColorSet(Vec<usize>);

impl ColorSet {
    pub fn new(colors: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = colors.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Contract("color set must be nonempty".into()));
        }
        if set.contains(&0) {
            return Err(Error::Contract("colors are numbered from 1".into()));
        }
        Ok(Self(set.into_iter().collect()))
    }

    pub fn all(m: usize) -> Self {
        Self((1..=m + 1).collect())
    }

    pub fn colors(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, color: usize) -> bool {
        self.0.binary_search(&color).is_ok()
    }

    pub fn check(&self, m: usize) -> Result<()> {
        match self.0.last() {
            Some(&top) if top <= m + 1 => Ok(()),
            _ => Err(Error::Contract(format!(
                "color set {:?} not within 1..={}",
                self.0,
                m + 1
            ))),
        }
    }
}

impl TryFrom<Vec<usize>> for ColorSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ColorSet> for Vec<usize> {
    fn from(c: ColorSet) -> Self {
        c.0
    }
}

/// One connected cell of the partition. Coordinates are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub level: usize,
    /// Pinned coordinates, strictly increasing.
    pub pinned: Vec<usize>,
    /// Integer anchor of each pinned coordinate.
    pub anchors: Vec<i64>,
    /// Band origin of each free coordinate, in increasing coordinate order.
    pub origins: Vec<i64>,
}

impl CellId {
    pub fn color(&self) -> usize {
        self.level + 1
    }

    pub fn dim(&self) -> usize {
        self.pinned.len() + self.origins.len()
    }

    pub fn free(&self) -> Vec<usize> {
        let m = self.dim();
        let mut out = Vec::with_capacity(self.origins.len());
        let mut p = self.pinned.iter().peekable();
        for j in 0..m {
            if p.peek() == Some(&&j) {
                p.next();
            } else {
                out.push(j);
            }
        }
        out
    }

    /// Per-coordinate integers: the anchor if pinned, the origin if free.
    pub fn integers(&self) -> Vec<i64> {
        let m = self.dim();
        let mut out = Vec::with_capacity(m);
        let (mut pi, mut fi) = (0, 0);
        for j in 0..m {
            if self.pinned.get(pi) == Some(&j) {
                out.push(self.anchors[pi]);
                pi += 1;
            } else {
                out.push(self.origins[fi]);
                fi += 1;
            }
        }
        out
    }

    fn from_parts(level: usize, pinned: Vec<usize>, integers: &[i64]) -> Self {
        let mut anchors = Vec::with_capacity(pinned.len());
        let mut origins = Vec::with_capacity(integers.len() - pinned.len());
        let mut p = pinned.iter().peekable();
        for (j, &z) in integers.iter().enumerate() {
            if p.peek() == Some(&&j) {
                p.next();
                anchors.push(z);
            } else {
                origins.push(z);
            }
        }
        Self {
            level,
            pinned,
            anchors,
            origins,
        }
    }

    pub fn check(&self, m: usize) -> Result<()> {
        let ok = self.level <= m
            && self.pinned.len() == m - self.level
            && self.anchors.len() == self.pinned.len()
            && self.origins.len() == self.level
            && self.pinned.windows(2).all(|w| w[0] < w[1])
            && self.pinned.last().is_none_or(|&j| j < m);
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!("malformed cell {self:?} for m = {m}")))
        }
    }
}

/// Distance of a coordinate to ℤ together with its floor and nearest integer.
struct CoordInfo<S> {
    floor: i64,
    nearest: i64,
    dist: S,
}

fn coord_info<S: Scalar>(y: &S, index: usize) -> Result<CoordInfo<S>> {
    let (floor, frac, up) = y.unit_split().ok_or(Error::NonFinite { index })?;
    if frac <= up {
        Ok(CoordInfo {
            floor,
            nearest: floor,
            dist: frac,
        })
    } else {
        Ok(CoordInfo {
            floor,
            nearest: floor + 1,
            dist: up,
        })
    }
}

fn coord_infos<S: Scalar>(y: &[S]) -> Result<Vec<CoordInfo<S>>> {
    y.iter().enumerate().map(|(j, v)| coord_info(v, j)).collect()
}

fn cmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

fn sorted_dists<S: Scalar>(infos: &[CoordInfo<S>]) -> Vec<S> {
    let mut e: Vec<S> = infos.iter().map(|c| c.dist.clone()).collect();
    e.sort_by(cmp);
    e
}

fn level_from_sorted<S: Scalar>(e: &[S], delta: &[S]) -> usize {
    let m = e.len();
    (0..m).find(|&k| e[m - k - 1] <= delta[k]).unwrap_or(m)
}

/// Level of an unscaled point (color is level + 1).
pub fn level_of<S: Scalar>(x: &[S], spec: &PartitionSpec<S>) -> Result<usize> {
    spec.check_point(x)?;
    let infos = coord_infos(x)?;
    Ok(level_from_sorted(&sorted_dists(&infos), &spec.delta))
}

/// The cell of an unscaled point.
pub fn cell_of<S: Scalar>(x: &[S], spec: &PartitionSpec<S>) -> Result<CellId> {
    spec.check_point(x)?;
    let infos = coord_infos(x)?;
    let level = level_from_sorted(&sorted_dists(&infos), &spec.delta);
    let pin_radius = if level == 0 {
        &spec.delta[0]
    } else {
        &spec.delta[level - 1]
    };
    let mut pinned = Vec::new();
    let mut anchors = Vec::new();
    let mut origins = Vec::new();
    for (j, info) in infos.iter().enumerate() {
        if info.dist <= *pin_radius {
            pinned.push(j);
            anchors.push(info.nearest);
        } else {
            origins.push(info.floor);
        }
    }
    debug_assert_eq!(pinned.len(), spec.m - level);
    Ok(CellId {
        level,
        pinned,
        anchors,
        origins,
    })
}

/// Positive-integer code of a cell, bijective per color.
///
/// `code = pair_all(zigzag(integers)) · C(m, |pinned|) + rank(pinned) + 1`.
pub fn encode_cell(cid: &CellId) -> BigUint {
    let m = cid.dim();
    let naturals: Vec<BigUint> = cid.integers().into_iter().map(|z| BigUint::from(zigzag(z))).collect();
    let paired = pair_all(&naturals);
    let subsets = binomial(m, cid.pinned.len());
    paired * BigUint::from(subsets) + BigUint::from(rank_subset(&cid.pinned)) + 1u32
}

pub fn decode_cell<S: Scalar>(code: &BigUint, color: usize, spec: &PartitionSpec<S>) -> Result<CellId> {
    let m = spec.m;
    let not_a_cell = || Error::NotACell {
        code: code.to_string(),
        color,
    };
    if color == 0 || color > m + 1 || code.is_zero() {
        return Err(not_a_cell());
    }
    let level = color - 1;
    let subsets = BigUint::from(binomial(m, m - level));
    let n = code - 1u32;
    let paired = &n / &subsets;
    let rank = (&n % &subsets).to_u128().ok_or_else(not_a_cell)?;
    let pinned = unrank_subset(rank, m, m - level).ok_or_else(not_a_cell)?;
    let integers = unpair_all(&paired, m)
        .iter()
        .map(|v| v.to_u64().map(unzigzag))
        .collect::<Option<Vec<i64>>>()
        .ok_or_else(not_a_cell)?;
    Ok(CellId::from_parts(level, pinned, &integers))
}

/// Unscaled distances from `y` to the closure of each level, index = level.
pub fn dist_to_levels_unscaled<S: Scalar>(y: &[S], spec: &PartitionSpec<S>) -> Result<Vec<S>> {
    spec.check_point(y)?;
    let infos = coord_infos(y)?;
    let e = sorted_dists(&infos);
    let m = spec.m;
    let delta = &spec.delta;
    let mut out = Vec::with_capacity(m + 1);
    // running max over i < k of δ_i − e_{m−i}
    let mut carve = S::zero();
    for k in 0..=m {
        if k < m {
            let gap = e[m - k - 1].clone() - delta[k].clone();
            out.push(max_of(carve.clone(), gap.clone()));
            carve = max_of(carve, -gap);
        } else {
            out.push(carve.clone());
        }
    }
    Ok(out)
}

/// Max-norm distance from `x` to the closure of the union of the scaled color classes in `colors`.
pub fn dist_to_colors<S: Scalar>(x: &[S], colors: &ColorSet, spec: &PartitionSpec<S>) -> Result<S> {
    let y = spec.unscale(x)?;
    Ok(dist_to_colors_unscaled(&y, colors, spec)? * spec.eps.clone())
}

/// Unscaled distance from `y` to the closure of the union of the color classes in `colors`.
pub fn dist_to_colors_unscaled<S: Scalar>(y: &[S], colors: &ColorSet, spec: &PartitionSpec<S>) -> Result<S> {
    colors.check(spec.m)?;
    let levels = dist_to_levels_unscaled(y, spec)?;
    Ok(colors
        .colors()
        .iter()
        .map(|&r| levels[r - 1].clone())
        .reduce(min_of)
        .expect("nonempty color set"))
}

/// Unscaled distance from `y` to the closure of one cell.
pub fn dist_to_cell_unscaled<S: Scalar>(y: &[S], cid: &CellId, spec: &PartitionSpec<S>) -> Result<S> {
    spec.check_point(y)?;
    cid.check(spec.m)?;
    let k = cid.level;
    let delta = &spec.delta;
    let mut best = S::zero();
    for (&j, &a) in cid.pinned.iter().zip(&cid.anchors) {
        let off = (y[j].clone() - S::from_i64(a)).abs() - delta[k].clone();
        best = max_of(best, off);
    }
    if k > 0 {
        let half = S::half();
        let mut depth: Vec<S> = cid
            .free()
            .iter()
            .zip(&cid.origins)
            .map(|(&j, &o)| {
                let centre = S::from_i64(o) + half.clone();
                half.clone() - (y[j].clone() - centre).abs()
            })
            .collect();
        depth.sort_by(|a, b| cmp(b, a));
        for (i, v) in depth.into_iter().enumerate() {
            best = max_of(best, delta[i].clone() - v);
        }
    }
    Ok(best)
}

/// Max-norm distance from `x` to the closure of the scaled cell `ε·D_cid`.
pub fn dist_to_cell<S: Scalar>(x: &[S], cid: &CellId, spec: &PartitionSpec<S>) -> Result<S> {
    let y = spec.unscale(x)?;
    Ok(dist_to_cell_unscaled(&y, cid, spec)? * spec.eps.clone())
}

/// The centre of `ε·D_cid`: anchors on pinned coordinates, band midpoints on free ones.
pub fn representative<S: Scalar>(cid: &CellId, spec: &PartitionSpec<S>) -> Result<Vec<S>> {
    cid.check(spec.m)?;
    let half = S::half();
    let mut out = Vec::with_capacity(spec.m);
    let (mut pi, mut fi) = (0, 0);
    for j in 0..spec.m {
        let v = if cid.pinned.get(pi) == Some(&j) {
            pi += 1;
            S::from_i64(cid.anchors[pi - 1])
        } else {
            fi += 1;
            S::from_i64(cid.origins[fi - 1]) + half.clone()
        };
        out.push(v * spec.eps.clone());
    }
    Ok(out)
}

/// Cells of level `level` whose closure lies within unscaled distance `radius` of `y`.
pub fn cells_near<S: Scalar>(y: &[S], level: usize, radius: &S, spec: &PartitionSpec<S>) -> Result<Vec<(CellId, S)>> {
    spec.check_point(y)?;
    if level > spec.m {
        return Err(Error::Contract(format!("level {level} exceeds m = {}", spec.m)));
    }
    let infos = coord_infos(y)?;
    let m = spec.m;
    // |y − a| − δ_k ≤ r and the band offsets are tested against small-denominator bounds
    let reach = spec.delta[level].clone() + radius.clone();
    let band = (level > 0).then(|| {
        let db = spec.delta[level - 1].clone();
        (db.clone() - radius.clone(), S::one() - db + radius.clone())
    });
    // (pinned?, integer) options per coordinate
    let mut options: Vec<Vec<(bool, i64)>> = Vec::with_capacity(m);
    for (j, info) in infos.iter().enumerate() {
        let mut opts = Vec::new();
        for a in info.nearest - 1..=info.nearest + 1 {
            let centre = S::from_i64(a);
            if y[j] >= centre.clone() - reach.clone() && y[j] <= centre + reach.clone() {
                opts.push((true, a));
            }
        }
        if let Some((lo, hi)) = &band {
            for o in info.floor - 1..=info.floor + 1 {
                let origin = S::from_i64(o);
                if y[j] >= origin.clone() + lo.clone() && y[j] <= origin + hi.clone() {
                    opts.push((false, o));
                }
            }
        }
        if opts.is_empty() {
            return Ok(Vec::new());
        }
        options.push(opts);
    }

    let mut found = Vec::new();
    let mut pinned = Vec::with_capacity(m);
    let mut integers = Vec::with_capacity(m);
    let target = m - level;
    #[allow(clippy::too_many_arguments)]
    fn walk<S: Scalar>(
        j: usize,
        options: &[Vec<(bool, i64)>],
        target: usize,
        level: usize,
        pinned: &mut Vec<usize>,
        integers: &mut Vec<i64>,
        y: &[S],
        radius: &S,
        spec: &PartitionSpec<S>,
        found: &mut Vec<(CellId, S)>,
    ) -> Result<()> {
        let m = options.len();
        if pinned.len() > target || pinned.len() + (m - j) < target {
            return Ok(());
        }
        if j == m {
            let cid = CellId::from_parts(level, pinned.clone(), integers);
            let d = dist_to_cell_unscaled(y, &cid, spec)?;
            if d <= *radius {
                found.push((cid, d));
            }
            return Ok(());
        }
        for &(is_pinned, z) in &options[j] {
            if is_pinned {
                pinned.push(j);
            }
            integers.push(z);
            walk(j + 1, options, target, level, pinned, integers, y, radius, spec, found)?;
            integers.pop();
            if is_pinned {
                pinned.pop();
            }
        }
        Ok(())
    }
    walk(
        0,
        &options,
        target,
        level,
        &mut pinned,
        &mut integers,
        y,
        radius,
        spec,
        &mut found,
    )?;
    Ok(found)
}
