//! Scalar abstraction for the linear-algebra carriers.
//!
//! The polyhedral verdict layer always runs over exact rationals ([`Rat`]);
//! the sampling oracles reuse the same vector/matrix types over `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};
use std::fmt::{Debug, Display};
use std::ops::Neg;

/// Field scalar usable by the generic vector/matrix code.
pub trait Scalar:
    Num + Signed + Neg<Output = Self> + PartialOrd + Clone + Debug + Display
{
    /// True when arithmetic on this scalar is exact (no rounding).
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
}

/// The exact scalar used by all polyhedral computation.
pub type Rat = BigRational;

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Shorthand for an exact rational `p/q`.
pub fn rat(p: i64, q: i64) -> Rat {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for an exact integer rational.
pub fn int(p: i64) -> Rat {
    BigRational::from_integer(BigInt::from(p))
}

/// Parses `p`, `p/q`, or a decimal literal like `-1.25` into an exact rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.trim_start().starts_with('-');
        let w: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole.parse().ok()?
        };
        let digits = frac.len() as u32;
        let f: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().ok()? };
        if f.is_negative() {
            return None;
        }
        let den = BigInt::from(10u32).pow(digits);
        let mag = w.abs() * &den + f;
        let signed = if neg { -mag } else { mag };
        return Some(BigRational::new(signed, den));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// Renders a rational as `p` or `p/q`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom() == &BigInt::one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat("-2").unwrap(), int(-2));
        assert_eq!(parse_rat("-1.25").unwrap(), rat(-5, 4));
        assert_eq!(parse_rat("0.5").unwrap(), rat(1, 2));
        assert!(parse_rat("1/0").is_none());
    }

    #[test]
    fn fmt_round_trip() {
        let r = rat(-7, 3);
        assert_eq!(parse_rat(&fmt_rat(&r)).unwrap(), r);
    }
}
