//! Number types the partition and protocol are generic over.
//!
//! Every functional in this crate is piecewise linear in the max norm, so the
//! whole pipeline closes over the rationals. [`Exact`] (a big rational) is the
//! default; `f64` is available for speed with an explicit zero-test tolerance.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Exact = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float64,
}

impl Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float64 => f.write_str("float64"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "rational" | "exact-rational" => Ok(Mode::Exact),
            "float64" | "f64" | "float" => Ok(Mode::Float64),
            other => Err(Error::Parse(format!("unknown arithmetic mode `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// `num / den`; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;
    /// Exact for [`Exact`]; `None` for non-finite input.
    fn from_f64(v: f64) -> Option<Self>;
    fn from_biguint(v: &BigUint) -> Self;
    fn from_rational(v: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact rational value, `None` when not finite.
    fn to_rational(&self) -> Option<BigRational>;
    fn is_finite(&self) -> bool;
    /// Floor as `i64`; `None` when non-finite or out of range.
    fn floor_i64(&self) -> Option<i64>;
    /// `(⌊v⌋, v − ⌊v⌋, 1 − (v − ⌊v⌋))`; `None` when non-finite or out of range.
    fn unit_split(&self) -> Option<(i64, Self, Self)> {
        let floor = self.floor_i64()?;
        let frac = self.clone() - Self::from_i64(floor);
        let up = Self::one() - frac.clone();
        Some((floor, frac, up))
    }
    fn abs(&self) -> Self;
    fn is_integer(&self) -> bool;
    /// Parses a decimal (`-1.25e-3`), an integer, or a fraction `p/q`.
    fn parse(s: &str) -> Result<Self>;
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Result<Self>;

    fn half() -> Self {
        Self::ratio(1, 2)
    }
}

pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if a <= b {
        a
    } else {
        b
    }
}

impl Scalar for BigRational {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn from_biguint(v: &BigUint) -> Self {
        BigRational::from_integer(BigInt::from_biguint(Sign::Plus, v.clone()))
    }

    fn from_rational(v: &BigRational) -> Self {
        v.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn floor_i64(&self) -> Option<i64> {
        self.floor().to_integer().to_i64()
    }

    fn unit_split(&self) -> Option<(i64, Self, Self)> {
        let den = self.denom();
        let (floor, rem) = self.numer().div_mod_floor(den);
        let up = den - &rem;
        // gcd(rem, den) = gcd(numer, den) = 1, so both parts are already reduced
        Some((
            floor.to_i64()?,
            BigRational::new_raw(rem, den.clone()),
            BigRational::new_raw(up, den.clone()),
        ))
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn is_integer(&self) -> bool {
        BigRational::is_integer(self)
    }

    fn parse(s: &str) -> Result<Self> {
        parse_rational(s)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => parse_rational(&n.to_string()),
            other => Err(Error::Parse(format!("expected a rational, got {other}"))),
        }
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float64;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn from_biguint(v: &BigUint) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_rational(v: &BigRational) -> Self {
        ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn floor_i64(&self) -> Option<i64> {
        let f = self.floor();
        (f.is_finite() && f >= i64::MIN as f64 && f < i64::MAX as f64).then_some(f as i64)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn is_integer(&self) -> bool {
        self.fract() == 0.0
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let v = match s.split_once('/') {
            Some((n, d)) => {
                let n: f64 = n.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
                let d: f64 = d.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
                n / d
            }
            None => s.parse().map_err(|_| Error::Parse(s.to_string()))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse(format!("`{s}` is not a finite number")))
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            serde_json::Value::String(s) => <f64 as Scalar>::parse(s),
            other => Err(Error::Parse(format!("expected a number, got {other}"))),
        }
    }
}

/// Parses decimal, scientific, integer or `p/q` notation into an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational> {
    let s = input.trim();
    let bad = || Error::Parse(format!("`{input}` is not a decimal or fraction"));
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("`{input}` has a zero denominator")));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if exponent.unsigned_abs() > 10_000 {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| bad())?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        <Exact as Scalar>::ratio(n, d)
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), q(-5, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("+3").unwrap(), q(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("1.5E2").unwrap(), q(150, 1));
        assert_eq!(parse_rational("3/8").unwrap(), q(3, 8));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "-", "1..2", "abc", "1/0", "1e", "0x10", "nan"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn float_conversion_is_exact() {
        let v = 0.1f64;
        let r = <Exact as Scalar>::from_f64(v).unwrap();
        assert_ne!(r, q(1, 10));
        assert_eq!(Scalar::to_f64(&r), v);
        assert!(<Exact as Scalar>::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn json_round_trip() {
        let r = q(-7, 3);
        assert_eq!(Exact::from_json(&r.to_json()).unwrap(), r);
        let f = 0.125f64;
        assert_eq!(<f64 as Scalar>::from_json(&f.to_json()).unwrap(), f);
    }
}
