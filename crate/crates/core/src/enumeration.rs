//! Bijections used to number cells: signed zigzag, Szudzik pairing folded over
//! a balanced tree, and colex ranking of fixed-size coordinate subsets.

use num_bigint::BigUint;
use num_traits::Zero;

/// `0, -1, 1, -2, 2, ...` onto `0, 1, 2, 3, 4, ...`.
pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(n: u64) -> i64 {
    ((n >> 1) as i64) ^ -((n & 1) as i64)
}

/// Szudzik's pairing `ℕ × ℕ → ℕ`. Both arguments `< k` map below `k²`.
pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    if a < b {
        b * b + a
    } else {
        a * a + a + b
    }
}

pub fn unpair(z: &BigUint) -> (BigUint, BigUint) {
    let s = z.sqrt();
    let rem = z - &s * &s;
    if rem < s {
        (rem, s)
    } else {
        let b = rem - &s;
        (s, b)
    }
}

/// Folds `values` into one natural with a balanced pairing tree.
///
/// The tree shape depends only on `values.len()`, so [`unpair_all`] can invert
/// it given the length.
pub fn pair_all(values: &[BigUint]) -> BigUint {
    match values.len() {
        0 => BigUint::zero(),
        1 => values[0].clone(),
        n => {
            let mid = n.div_ceil(2);
            pair(&pair_all(&values[..mid]), &pair_all(&values[mid..]))
        }
    }
}

pub fn unpair_all(z: &BigUint, len: usize) -> Vec<BigUint> {
    match len {
        0 => Vec::new(),
        1 => vec![z.clone()],
        n => {
            let mid = n.div_ceil(2);
            let (left, right) = unpair(z);
            let mut out = unpair_all(&left, mid);
            out.extend(unpair_all(&right, n - mid));
            out
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Colex rank of a strictly increasing subset among subsets of the same size.
pub fn rank_subset(subset: &[usize]) -> u128 {
    subset.iter().enumerate().map(|(i, &s)| binomial(s, i + 1)).sum()
}

/// Inverse of [`rank_subset`] for subsets of `{0..n}` of size `k`.
pub fn unrank_subset(mut rank: u128, n: usize, k: usize) -> Option<Vec<usize>> {
    if rank >= binomial(n, k) {
        return None;
    }
    let mut out = vec![0; k];
    let mut upper = n;
    for i in (0..k).rev() {
        let mut s = upper;
        while s > i && binomial(s - 1, i + 1) > rank {
            s -= 1;
        }
        let s = s - 1;
        rank -= binomial(s, i + 1);
        out[i] = s;
        upper = s;
    }
    Some(out)
}
