//! Arithmetic backends.
//!
//! Every structure in the crate is generic over [`Scalar`]. Two backends are
//! provided: [`Rational`] (arbitrary precision, exact) and `f64`. Comparisons
//! in float mode go through an explicit [`Tolerance`]; the exact backend
//! ignores it.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Rational = BigRational;

/// Absolute tolerance used by float-mode comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance(pub f64);

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance(1e-9)
    }
}

impl Tolerance {
    pub const EXACT: Tolerance = Tolerance(0.0);
}

/// A number type the algebra can run over.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Send + Sync + 'static + Num + Signed
{
    /// `true` for exact arithmetic (tolerances are ignored).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    /// Rational backend: the exact value of the shortest decimal that
    /// round-trips to `x`, so `0.1` becomes `1/10`.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value of `self`.
    fn to_rational(&self) -> Rational;

    fn from_rational(r: &Rational) -> Self;

    fn approx_eq(&self, other: &Self, tol: Tolerance) -> bool;

    fn is_negligible(&self, tol: Tolerance) -> bool {
        self.approx_eq(&Self::zero(), tol)
    }

    /// Strictly positive beyond the tolerance; used for support detection.
    fn is_significant(&self, tol: Tolerance) -> bool {
        !self.is_negligible(tol) && *self > Self::zero()
    }

    /// Wire rendering: `"num/den"` for rationals, shortest round-trip
    /// decimal for floats.
    fn render(&self) -> String;

    fn parse_str(s: &str) -> Result<Self>;

    fn to_repr(&self) -> ScalarRepr;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Self {
        parse_decimal(&format!("{x}")).unwrap_or_else(|| {
            <Rational as FromPrimitive>::from_f64(x).expect("finite float converts to a rational")
        })
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn approx_eq(&self, other: &Self, _tol: Tolerance) -> bool {
        self == other
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn parse_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err("bad numerator"))?;
            let d: BigInt = d.trim().parse().map_err(|_| err("bad denominator"))?;
            if d.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(Rational::new(n, d));
        }
        parse_decimal(t).ok_or_else(|| err("expected 'num/den', an integer or a decimal"))
    }

    fn to_repr(&self) -> ScalarRepr {
        ScalarRepr::Str(self.render())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        <Rational as FromPrimitive>::from_f64(*self).unwrap_or_else(Rational::zero)
    }

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn approx_eq(&self, other: &Self, tol: Tolerance) -> bool {
        (self - other).abs() <= tol.0
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn parse_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.contains('/') {
            return Rational::parse_str(t).map(|r| Scalar::to_f64(&r));
        }
        t.parse::<f64>().map_err(|e| Error::Parse {
            input: s.to_string(),
            reason: e.to_string(),
        })
    }

    fn to_repr(&self) -> ScalarRepr {
        ScalarRepr::Float(*self)
    }
}

/// Parses `[-]digits[.digits][e[-]digits]` into an exact rational.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str_radix(&digits, 10).ok()?;
    if neg {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// JSON-facing form of a scalar: integers, floats, or strings such as `"3/8"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarRepr {
    Int(i64),
    Float(f64),
    Str(String),
}

impl ScalarRepr {
    pub fn parse<S: Scalar>(&self) -> Result<S> {
        match self {
            ScalarRepr::Int(i) => Ok(S::from_ratio(*i, 1)),
            ScalarRepr::Float(x) => Ok(S::from_f64(*x)),
            ScalarRepr::Str(s) => S::parse_str(s),
        }
    }
}

pub(crate) fn to_reprs<S: Scalar>(xs: &[S]) -> Vec<ScalarRepr> {
    xs.iter().map(Scalar::to_repr).collect()
}

pub(crate) fn from_reprs<S: Scalar>(xs: &[ScalarRepr]) -> Result<Vec<S>> {
    xs.iter().map(ScalarRepr::parse).collect()
}

/// Sum of a slice of scalars.
pub fn sum<S: Scalar>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |acc, x| acc + x.clone())
}

/// Convenience constructor for exact fractions.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_render_is_num_over_den() {
        assert_eq!(q(0, 1).render(), "0/1");
        assert_eq!(q(2, 4).render(), "1/2");
        assert_eq!(q(-3, 9).render(), "-1/3");
    }

    #[test]
    fn rational_parse_forms() {
        assert_eq!(Rational::parse_str("3/8").unwrap(), q(3, 8));
        assert_eq!(Rational::parse_str("2").unwrap(), q(2, 1));
        assert_eq!(Rational::parse_str("0.125").unwrap(), q(1, 8));
        assert_eq!(Rational::parse_str("-1.5e-1").unwrap(), q(-3, 20));
        assert!(Rational::parse_str("1/0").is_err());
        assert!(Rational::parse_str("abc").is_err());
    }

    #[test]
    fn float_values_become_their_decimal() {
        assert_eq!(<Rational as Scalar>::from_f64(0.1), q(1, 10));
        assert_eq!(<Rational as Scalar>::from_f64(0.25), q(1, 4));
    }

    #[test]
    fn repr_round_trip_through_json() {
        let v = vec![q(1, 3), q(2, 3)];
        let json = serde_json::to_string(&to_reprs(&v)).unwrap();
        assert_eq!(json, r#"["1/3","2/3"]"#);
        let back: Vec<ScalarRepr> = serde_json::from_str(r#"["1/3", 0.5, 1]"#).unwrap();
        let parsed: Vec<Rational> = from_reprs(&back).unwrap();
        assert_eq!(parsed, vec![q(1, 3), q(1, 2), q(1, 1)]);
    }

    #[test]
    fn float_tolerance() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-12), Tolerance::default()));
        assert!(!1.0f64.approx_eq(&(1.0 + 1e-6), Tolerance::default()));
        assert!(!(1e-12f64).is_significant(Tolerance::default()));
    }
}
