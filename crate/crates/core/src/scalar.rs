//! Numeric abstraction shared by the exact (rational) and floating-point paths.
//!
//! Everything that only needs field arithmetic and ordering (expected
//! utilities, CCE inequalities, the simplex tableau, arborescence weights) is
//! written against [`Scalar`]. Code that needs `powf` (the learning dynamics)
//! works in `f64` directly.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational used for exact results.
pub type Rational = BigRational;

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Slack used when comparing against zero. Exactly zero for exact types.
    fn tolerance() -> Self;

    /// `true` when arithmetic is exact.
    fn is_exact() -> bool;

    fn from_rational(r: &Rational) -> Self;

    /// Exact value as a rational; `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational> {
        self.to_f64().and_then(Rational::from_float)
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Interprets `x` as the decimal literal it prints as, so `0.85` becomes
    /// `17/20` for exact types rather than the nearest binary fraction.
    fn from_decimal(x: f64) -> Option<Self> {
        parse_decimal(&format!("{x}")).map(|r| Self::from_rational(&r))
    }

    /// Parses `"17/20"`, `"-3"` or `"0.85"`.
    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.contains('/') {
            Rational::from_str(text).ok().map(|r| Self::from_rational(&r))
        } else {
            parse_decimal(text).map(|r| Self::from_rational(&r))
        }
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    /// `self > other` beyond tolerance.
    fn definitely_gt(&self, other: &Self) -> bool {
        self.clone() - other.clone() > Self::tolerance()
    }

    /// `|self - other| <= tolerance`.
    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-11
    }

    fn is_exact() -> bool {
        false
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn from_decimal(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }

    fn is_exact() -> bool {
        false
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }

    fn is_finite(&self) -> bool {
        f32::is_finite(*self)
    }
}

impl Scalar for Rational {
    fn tolerance() -> Self {
        Rational::zero()
    }

    fn is_exact() -> bool {
        true
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Sum of a sequence of scalars.
pub fn sum<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v.clone())
}

pub(crate) fn max_of<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    values.into_iter().fold(None, |best, v| match best {
        Some(b) if b >= v => Some(b),
        _ => Some(v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_become_exact_fractions() {
        assert_eq!(Rational::from_decimal(0.85).unwrap(), Rational::from_ratio(17, 20));
        assert_eq!(Rational::from_decimal(-0.1).unwrap(), Rational::from_ratio(-1, 10));
        assert_eq!(Rational::from_decimal(3.0).unwrap(), Rational::from_ratio(3, 1));
        assert!(Rational::from_decimal(f64::NAN).is_none());
        assert!(f64::from_decimal(f64::INFINITY).is_none());
    }

    #[test]
    fn parse_accepts_fractions_and_decimals() {
        assert_eq!(Rational::parse("1/11").unwrap(), Rational::from_ratio(1, 11));
        assert_eq!(Rational::parse(" 2.5e-1 ").unwrap(), Rational::from_ratio(1, 4));
        assert_eq!(f64::parse("3/4").unwrap(), 0.75);
        assert!(Rational::parse("abc").is_none());
        assert!(Rational::parse(".").is_none());
    }

    #[test]
    fn tolerance_comparisons() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-13)));
        assert!(!Rational::from_ratio(1, 3).approx_eq(&Rational::from_ratio(333_333, 1_000_000)));
        assert!(Rational::from_ratio(1, 2).definitely_gt(&Rational::from_ratio(1, 3)));
        assert_eq!(f32::half(), 0.5);
    }
}
