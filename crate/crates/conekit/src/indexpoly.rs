//! Rational Laurent polynomials in the family index `i` (powers of `i` and
//! `1/i`), the coefficient language of indexed set templates.
//!
//! Besides exact evaluation at integer indices, this layer answers the two
//! symbolic questions the truncation machinery needs: the behaviour as
//! `i -> infinity` (degree-dominant analysis) and sign certification over all
//! integer indices `i >= 1` (leading-sign plus a Cauchy root bound).

use crate::error::{ConeError, Result};
use crate::linalg::QVec;
use crate::scalar::{parse_rat, Rat};
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// `sum_k c_k i^k` with integer exponents `k` (possibly negative).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IndexPoly {
    coeffs: BTreeMap<i64, Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexLimit {
    Finite(Rat),
    PlusInfinity,
    MinusInfinity,
}

impl IndexPoly {
    pub fn zero() -> Self {
        IndexPoly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(0, c);
        }
        IndexPoly { coeffs }
    }

    /// The index variable `i` itself.
    pub fn var() -> Self {
        IndexPoly::monomial(1, Rat::from_integer(1.into()))
    }

    pub fn monomial(exp: i64, c: Rat) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exp, c);
        }
        IndexPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|&k| k == 0)
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn min_degree(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn leading_coeff(&self) -> Rat {
        self.degree()
            .map(|d| self.coeffs[&d].clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn coeff(&self, exp: i64) -> Rat {
        self.coeffs.get(&exp).cloned().unwrap_or_else(Rat::zero)
    }

    /// Exact evaluation at an integer index `i >= 1`.
    pub fn eval(&self, i: i64) -> Result<Rat> {
        if i < 1 {
            return Err(ConeError::IndexOutOfRange { index: i, max: i64::MAX });
        }
        let iv = Rat::from_integer(i.into());
        let mut acc = Rat::zero();
        for (&k, c) in &self.coeffs {
            let mut p = Rat::from_integer(1.into());
            for _ in 0..k.abs() {
                p = p * iv.clone();
            }
            let term = if k >= 0 { c.clone() * p } else { c.clone() / p };
            acc = acc + term;
        }
        Ok(acc)
    }

    pub fn limit_at_infinity(&self) -> IndexLimit {
        match self.degree() {
            None => IndexLimit::Finite(Rat::zero()),
            Some(d) if d < 0 => IndexLimit::Finite(Rat::zero()),
            Some(0) => IndexLimit::Finite(self.coeff(0)),
            Some(_) => {
                if self.leading_coeff().is_positive() {
                    IndexLimit::PlusInfinity
                } else {
                    IndexLimit::MinusInfinity
                }
            }
        }
    }

    /// Certifies `p(i) >= 0` for every integer `i >= 1`.
    ///
    /// Multiplying by `i^(-min exp)` gives an ordinary polynomial with the
    /// same sign at positive arguments; the Cauchy bound
    /// `B = 1 + max|a_k|/|a_n|` has all real roots in `[-B, B]`, so the sign
    /// is that of the leading coefficient beyond `B` and is checked pointwise
    /// at the integers up to `B`.
    pub fn nonneg_for_all_indices(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        if self.leading_coeff().is_negative() {
            return false;
        }
        let bound = self.cauchy_bound();
        for i in 1..=bound {
            if self.eval(i).map(|v| v.is_negative()).unwrap_or(true) {
                return false;
            }
        }
        true
    }

    /// Certifies `p(i) <= 0` for every integer `i >= 1`.
    pub fn nonpos_for_all_indices(&self) -> bool {
        (-self).nonneg_for_all_indices()
    }

    /// Sign of `p(i)` for all sufficiently large `i` (the leading sign).
    pub fn eventual_sign(&self) -> i32 {
        let lc = self.leading_coeff();
        if lc.is_positive() {
            1
        } else if lc.is_negative() {
            -1
        } else {
            0
        }
    }

    fn cauchy_bound(&self) -> i64 {
        let lead = self.leading_coeff().abs();
        let max_ratio = self
            .coeffs
            .values()
            .map(|c| c.abs() / lead.clone())
            .fold(Rat::zero(), |a, b| if b > a { b } else { a });
        let b = Rat::from_integer(1.into()) + max_ratio;
        // ceil(b), clamped to something comfortably iterable
        let ceil = (b.numer() + b.denom() - num_bigint::BigInt::from(1)) / b.denom();
        use num_traits::ToPrimitive;
        ceil.to_i64().unwrap_or(i64::MAX).min(1 << 20).max(1)
    }

    /// Parses a term sum like `2*i^2 - 3 + 1/i`.
    ///
    /// Each term is `[rational]`, `[rational *] i [^k]`, or
    /// `[rational] / i [^k]`; a bare `i` means coefficient 1.
    pub fn parse(s: &str) -> Result<IndexPoly> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(ConeError::Malformed("empty index-polynomial string".into()));
        }
        let mut terms: Vec<String> = Vec::new();
        let mut cur = String::new();
        for (pos, ch) in compact.chars().enumerate() {
            if (ch == '+' || ch == '-') && pos != 0 {
                terms.push(std::mem::take(&mut cur));
                if ch == '-' {
                    cur.push('-');
                }
            } else {
                cur.push(ch);
            }
        }
        terms.push(cur);

        let mut poly = IndexPoly::zero();
        for t in terms {
            poly = &poly + &Self::parse_term(&t)?;
        }
        Ok(poly)
    }

    fn parse_term(t: &str) -> Result<IndexPoly> {
        let bad = || ConeError::Malformed(format!("cannot parse index-polynomial term '{t}'"));
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let t = t.strip_prefix('+').unwrap_or(t);
        let (coeff, exp) = match t.find('i') {
            None => (parse_rat(t).ok_or_else(bad)?, 0),
            Some(pos) => {
                let prefix = &t[..pos];
                let suffix = &t[pos + 1..];
                let k: i64 = if suffix.is_empty() {
                    1
                } else {
                    suffix.strip_prefix('^').and_then(|e| e.parse().ok()).ok_or_else(bad)?
                };
                if let Some(p) = prefix.strip_suffix('/') {
                    let c = if p.is_empty() {
                        Rat::from_integer(1.into())
                    } else {
                        parse_rat(p).ok_or_else(bad)?
                    };
                    (c, -k)
                } else {
                    let p = prefix.strip_suffix('*').unwrap_or(prefix);
                    let c = if p.is_empty() {
                        Rat::from_integer(1.into())
                    } else {
                        parse_rat(p).ok_or_else(bad)?
                    };
                    (c, k)
                }
            }
        };
        let c = if neg { -coeff } else { coeff };
        Ok(IndexPoly::monomial(exp, c))
    }

    pub fn to_string_canonical(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (&k, c) in self.coeffs.iter().rev() {
            let coeff = crate::scalar::fmt_rat(c);
            let part = match k {
                0 => coeff,
                1 if coeff == "1" => "i".into(),
                1 if coeff == "-1" => "-i".into(),
                1 => format!("{coeff}*i"),
                k if k > 1 && coeff == "1" => format!("i^{k}"),
                k if k > 1 => format!("{coeff}*i^{k}"),
                -1 => format!("{coeff}/i"),
                k => format!("{coeff}/i^{}", -k),
            };
            parts.push(part);
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            if let Some(stripped) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

impl Add for &IndexPoly {
    type Output = IndexPoly;
    fn add(self, rhs: &IndexPoly) -> IndexPoly {
        let mut coeffs = self.coeffs.clone();
        for (&k, c) in &rhs.coeffs {
            let v = coeffs.entry(k).or_insert_with(Rat::zero);
            *v = v.clone() + c.clone();
            if v.is_zero() {
                coeffs.remove(&k);
            }
        }
        IndexPoly { coeffs }
    }
}

impl Sub for &IndexPoly {
    type Output = IndexPoly;
    fn sub(self, rhs: &IndexPoly) -> IndexPoly {
        self + &(-rhs)
    }
}

impl Neg for &IndexPoly {
    type Output = IndexPoly;
    fn neg(self) -> IndexPoly {
        IndexPoly {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, -c.clone())).collect(),
        }
    }
}

impl Mul for &IndexPoly {
    type Output = IndexPoly;
    fn mul(self, rhs: &IndexPoly) -> IndexPoly {
        let mut coeffs: BTreeMap<i64, Rat> = BTreeMap::new();
        for (&ka, ca) in &self.coeffs {
            for (&kb, cb) in &rhs.coeffs {
                let v = coeffs.entry(ka + kb).or_insert_with(Rat::zero);
                *v = v.clone() + ca.clone() * cb.clone();
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        IndexPoly { coeffs }
    }
}

/// A vector whose coordinates are index polynomials (e.g. `a_i = (1, i)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexVec {
    pub coords: Vec<IndexPoly>,
}

impl IndexVec {
    pub fn new(coords: Vec<IndexPoly>) -> Self {
        IndexVec { coords }
    }

    pub fn parse(coords: &[String]) -> Result<Self> {
        Ok(IndexVec {
            coords: coords.iter().map(|s| IndexPoly::parse(s)).collect::<Result<_>>()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn eval(&self, i: i64) -> Result<QVec> {
        Ok(crate::linalg::Vector::new(
            self.coords.iter().map(|p| p.eval(i)).collect::<Result<_>>()?,
        ))
    }

    pub fn is_constant(&self) -> bool {
        self.coords.iter().all(|p| p.is_constant())
    }

    /// Direction of `v(i)/|v(i)|` as `i -> infinity`: coefficients of the
    /// dominant power of `i`, canonically rescaled. `None` when the vector
    /// vanishes identically.
    pub fn limit_direction(&self) -> Option<QVec> {
        let d = self.coords.iter().filter_map(|p| p.degree()).max()?;
        let lead = crate::linalg::Vector::new(
            self.coords.iter().map(|p| p.coeff(d)).collect(),
        );
        if lead.is_zero() {
            None
        } else {
            Some(lead.canonical_ray())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn parse_and_eval() {
        let p = IndexPoly::parse("2*i^2 - 3 + 1/i").unwrap();
        assert_eq!(p.eval(2).unwrap(), rat(11, 2)); // 8 - 3 + 1/2
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.coeff(-1), int(1));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(IndexPoly::parse("i").unwrap(), IndexPoly::var());
        assert_eq!(IndexPoly::parse("-i").unwrap(), -&IndexPoly::var());
        assert_eq!(
            IndexPoly::parse("1/i").unwrap(),
            IndexPoly::monomial(-1, int(1))
        );
        assert_eq!(
            IndexPoly::parse("3/2*i").unwrap(),
            IndexPoly::monomial(1, rat(3, 2))
        );
        assert_eq!(IndexPoly::parse("7").unwrap(), IndexPoly::constant(int(7)));
        assert!(IndexPoly::parse("i^^2").is_err());
    }

    #[test]
    fn limits() {
        assert_eq!(
            IndexPoly::parse("1/i").unwrap().limit_at_infinity(),
            IndexLimit::Finite(int(0))
        );
        assert_eq!(
            IndexPoly::parse("3 - 1/i").unwrap().limit_at_infinity(),
            IndexLimit::Finite(int(3))
        );
        assert_eq!(
            IndexPoly::parse("-i + 100").unwrap().limit_at_infinity(),
            IndexLimit::MinusInfinity
        );
    }

    #[test]
    fn sign_certification() {
        // i^2 - 3i + 2 = (i-1)(i-2) >= 0 at every integer though negative on (1,2)
        let p = IndexPoly::parse("i^2 - 3*i + 2").unwrap();
        assert!(p.nonneg_for_all_indices());
        // i - 5 dips negative at small indices
        assert!(!IndexPoly::parse("i - 5").unwrap().nonneg_for_all_indices());
        assert!(IndexPoly::parse("i - 1").unwrap().nonneg_for_all_indices());
        assert!(IndexPoly::parse("-2/i").unwrap().nonpos_for_all_indices());
    }

    #[test]
    fn limit_direction_dominant_coordinate() {
        // a_i = (1, i) -> direction (0, 1)
        let v = IndexVec::parse(&["1".into(), "i".into()]).unwrap();
        assert_eq!(v.limit_direction().unwrap(), QVec::from_ints(&[0, 1]));
        // constant vector keeps its direction
        let c = IndexVec::parse(&["2".into(), "-4".into()]).unwrap();
        assert_eq!(c.limit_direction().unwrap(), QVec::from_ints(&[1, -2]));
    }

    #[test]
    fn canonical_string_round_trip() {
        let p = IndexPoly::parse("2*i^2-3+1/i").unwrap();
        let s = p.to_string_canonical();
        assert_eq!(IndexPoly::parse(&s).unwrap(), p);
    }
}
