//! Unnormalized exact fractions.
//!
//! Streaming Cesàro values carry denominators of the form `n * lcm(1..n)^r`,
//! so reducing every intermediate through a gcd dominates the running time.
//! [`Frac`] keeps numerator and denominator as computed and only reduces on
//! [`Frac::to_rational`]. Ordering first consults a float approximation and
//! falls back to exact cross-multiplication when the two values are close.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Relative separation above which the float filter is trusted.
const FILTER_TOLERANCE: f64 = 1e-12;

/// An exact fraction `num / den` with `den > 0`, not necessarily reduced.
#[derive(Clone, Debug)]
pub struct Frac {
    num: BigInt,
    den: BigInt,
}

impl Frac {
    /// Panics if `den` is not positive.
    pub fn new(num: BigInt, den: BigInt) -> Self {
        assert!(den.is_positive(), "Frac denominator must be positive");
        Frac { num, den }
    }

    pub fn zero() -> Self {
        Frac { num: BigInt::zero(), den: BigInt::one() }
    }

    pub fn from_integer(value: BigInt) -> Self {
        Frac { num: value, den: BigInt::one() }
    }

    pub fn from_rational(value: &BigRational) -> Self {
        Frac { num: value.numer().clone(), den: value.denom().clone() }
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &self.den)
    }

    /// `|self - other|`, unreduced.
    pub fn abs_diff(&self, other: &Frac) -> Frac {
        let num = (&self.num * &other.den - &other.num * &self.den).abs();
        Frac { num, den: &self.den * &other.den }
    }

    pub fn add(&self, other: &Frac) -> Frac {
        if self.den == other.den {
            return Frac { num: &self.num + &other.num, den: self.den.clone() };
        }
        Frac {
            num: &self.num * &other.den + &other.num * &self.den,
            den: &self.den * &other.den,
        }
    }

    fn exact_cmp(&self, other: &Frac) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialEq for Frac {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frac {}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.den == other.den {
            return self.num.cmp(&other.num);
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        let scale = 1f64.max(a.abs()).max(b.abs());
        if (a - b).abs() > FILTER_TOLERANCE * scale {
            return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
        }
        self.exact_cmp(other)
    }
}

/// Float approximation of `num / den` that stays finite for operands far
/// beyond the `f64` exponent range.
pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits().max(den.bits());
    let shift = bits.saturating_sub(62);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    if d == 0.0 {
        // den is tiny compared to num
        let s = num.bits().saturating_sub(62);
        let n = (num >> s).to_f64().unwrap_or(f64::NAN);
        let d = den.to_f64().unwrap_or(f64::NAN);
        return n / d * 2f64.powi(s.min(i32::MAX as u64) as i32);
    }
    n / d
}

pub fn rational_to_f64(value: &BigRational) -> f64 {
    ratio_to_f64(value.numer(), value.denom())
}

/// Formats a rational as `num/den` (or just `num` for integers).
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.125` exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if !int_digits.is_empty() && !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let all: BigInt = format!("{}{}", if int_digits.is_empty() { "0" } else { int_digits }, frac_part)
            .parse()
            .ok()?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(all, den);
        return Some(if negative { -value } else { value });
    }
    let p: BigInt = text.parse().ok()?;
    Some(BigRational::from_integer(p))
}


#[cfg(test)]
mod tests {
    use super::*;

    fn frac(n: i64, d: i64) -> Frac {
        Frac::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ordering_uses_exact_fallback_for_equal_values() {
        assert_eq!(frac(1, 3), frac(2, 6));
        assert!(frac(1, 3) < frac(334, 1000));
        assert!(frac(-1, 2) < frac(0, 7));
    }

    #[test]
    fn huge_operands_convert_to_finite_floats() {
        let big = num_traits::pow(BigInt::from(3), 5000);
        let f = Frac::new(big.clone(), big.clone() * 4);
        assert!((f.to_f64() - 0.25).abs() < 1e-15);
        let tiny = Frac::new(BigInt::one(), big);
        assert_eq!(tiny.to_f64(), 0.0);
    }

    #[test]
    fn near_ties_between_huge_fractions_are_resolved_exactly() {
        let base = num_traits::pow(BigInt::from(7), 900);
        let a = Frac::new(base.clone(), &base * 2 + 1);
        let b = Frac::new(base.clone() + 1, &base * 2 + 3);
        assert_eq!(a.cmp(&b), a.exact_cmp(&b));
        assert_ne!(a.cmp(&b), Ordering::Equal);
    }

    #[test]
    fn parses_rational_forms() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(parse_rational("3/6"), Some(r(1, 2)));
        assert_eq!(parse_rational("0.125"), Some(r(1, 8)));
        assert_eq!(parse_rational("-2"), Some(r(-2, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(format_rational(&r(6, 3)), "2");
        assert_eq!(format_rational(&r(1, 3)), "1/3");
    }
}
