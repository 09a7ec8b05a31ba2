//! Scalar types the bound evaluation is generic over.
//!
//! Probabilities are evaluated in `f64` by default. `f32` is available for
//! quick sweeps, and [`Rational`](crate::Rational) gives exact values when
//! `p` itself is rational.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync {
    /// Converts an exact configuration count.
    fn from_count(count: &BigUint) -> Self;

    /// Converts a double; for exact types the conversion is exact.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_f64(num as f64) / Self::from_f64(den as f64)
    }

    /// `(1 - p) / 2`, the probability of each active speed.
    fn active_weight(p: &Self) -> Self {
        (Self::one() - p.clone()) / (Self::one() + Self::one())
    }
}

impl Scalar for f64 {
    fn from_count(count: &BigUint) -> Self {
        count.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_count(count: &BigUint) -> Self {
        count.to_f32().unwrap_or(f32::INFINITY)
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_count(count: &BigUint) -> Self {
        BigRational::from_integer(BigInt::from(count.clone()))
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
}

/// `base^0, base^1, ..., base^max`.
pub(crate) fn powers<T: Scalar>(base: &T, max: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = T::one();
    for _ in 0..=max {
        out.push(acc.clone());
        acc = acc * base.clone();
    }
    out
}

/// Parses a decimal (`0.2870`, `1e-3`) or fraction (`287/1000`) literal
/// into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().ok()? / 10;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Renders an exact rational as a decimal string with `digits` places,
/// rounding half away from zero.
pub fn rational_to_decimal(x: &BigRational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = x * BigRational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded < BigInt::zero();
    let magnitude = if negative { -rounded } else { rounded };
    let int_part = &magnitude / &scale;
    let frac_part = &magnitude % &scale;
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
}

pub(crate) fn is_unit_interval<T: Scalar>(p: &T) -> bool {
    *p >= T::zero() && *p <= T::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn decimal_literals() {
        assert_eq!(parse_rational("0.2870"), Some(BigRational::from_ratio(287, 1000)));
        assert_eq!(parse_rational("1/4"), Some(BigRational::from_ratio(1, 4)));
        assert_eq!(parse_rational("2.5e-1"), Some(BigRational::from_ratio(1, 4)));
        assert_eq!(parse_rational(".5"), Some(BigRational::from_ratio(1, 2)));
        assert_eq!(parse_rational("-3"), Some(BigRational::from_ratio(-3, 1)));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn decimal_rendering() {
        let x = BigRational::new(1.into(), 3.into());
        assert_eq!(rational_to_decimal(&x, 4), "0.3333");
        let y = BigRational::new((-9).into(), 256.into());
        assert_eq!(rational_to_decimal(&y, 5), "-0.03516");
        assert_eq!(rational_to_decimal(&BigRational::one(), 2), "1.00");
    }

    #[test]
    fn active_weight_is_exact() {
        let p = BigRational::from_ratio(1, 4);
        assert_eq!(BigRational::active_weight(&p), BigRational::from_ratio(3, 8));
        assert_eq!(f64::active_weight(&0.25), 0.375);
    }
}
