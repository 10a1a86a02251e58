//! Scalar arithmetic shared by every engine.
//!
//! All masses and values are computed over a [`Scalar`]. The default is the
//! exact big rational [`Q`]; `f64` is available for larger sweeps, with sign
//! tests using a slack of `1e-12` and cross-route comparisons a relative
//! tolerance of `1e-9`.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational used throughout the library.
pub type Q = BigRational;

/// Relative tolerance used when two float routes are compared.
pub const FLOAT_AGREEMENT: f64 = 1e-9;

const FLOAT_SLACK: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum
{
    /// `true` for exact arithmetic.
    const EXACT: bool;

    fn from_q(q: &Q) -> Self;

    fn to_f64(&self) -> f64;

    /// Canonical text form: `num/den` for rationals, shortest round-trip
    /// decimal for floats.
    fn render(&self) -> String;

    fn is_positive_mass(&self) -> bool;

    fn is_negative_mass(&self) -> bool;

    /// Equality for exact scalars, relative agreement within
    /// [`FLOAT_AGREEMENT`] for floats.
    fn agrees_with(&self, other: &Self) -> bool;

    fn is_nan(&self) -> bool {
        false
    }

    fn is_negligible(&self) -> bool {
        !self.is_positive_mass() && !self.is_negative_mass()
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn from_q(q: &Q) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        render_q(self)
    }

    fn is_positive_mass(&self) -> bool {
        self.is_positive()
    }

    fn is_negative_mass(&self) -> bool {
        self.is_negative()
    }

    fn agrees_with(&self, other: &Self) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_q(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }

    fn is_positive_mass(&self) -> bool {
        *self > FLOAT_SLACK
    }

    fn is_negative_mass(&self) -> bool {
        *self < -FLOAT_SLACK
    }

    fn agrees_with(&self, other: &Self) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= FLOAT_AGREEMENT * scale
    }

    fn is_nan(&self) -> bool {
        f64::is_nan(*self)
    }
}

/// `n/d` as an exact rational. Panics on `d == 0`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn pow_q(base: &Q, exp: usize) -> Q {
    num_traits::pow(base.clone(), exp)
}

/// Renders a rational as `num/den`, always with an explicit denominator.
pub fn render_q(value: &Q) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a rational number: {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `a`, `a/b` or a finite decimal such as `-0.125`.
pub fn parse_q(text: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac);
        let mut n = BigInt::from_str(&digits).map_err(|_| err())?;
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Q::new(n, d));
    }
    let n = BigInt::from_str(s).map_err(|_| err())?;
    Ok(Q::from_integer(n))
}

/// Minimum of a non-empty slice of rationals.
pub fn min_q<'a>(values: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    values.into_iter().min().cloned()
}

pub fn max_q<'a>(values: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    values.into_iter().max().cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_q("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_q(" -2 ").unwrap(), qi(-2));
        assert_eq!(parse_q("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_q("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_q("6/8").unwrap(), q(3, 4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert!(parse_q("1.").is_err());
    }

    #[test]
    fn renders_with_explicit_denominator() {
        assert_eq!(render_q(&qi(2)), "2/1");
        assert_eq!(render_q(&q(-1, 3)), "-1/3");
        assert_eq!(parse_q(&render_q(&q(22, 7))).unwrap(), q(22, 7));
    }

    #[test]
    fn float_agreement_is_relative() {
        assert!(1.0f64.agrees_with(&(1.0 + 1e-12)));
        assert!(!1.0f64.agrees_with(&1.001));
        assert!(1e6f64.agrees_with(&(1e6 + 1e-4)));
        assert!(!q(1, 3).agrees_with(&q(1, 4)));
    }
}
