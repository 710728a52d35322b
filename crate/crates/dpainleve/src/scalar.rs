//! Scalar abstractions shared by the recurrences.
//!
//! `Field` covers exact rationals as well as floating types; `Real` adds
//! square roots and magnitude queries. Precision of a rug `Float` is carried
//! by the value itself, so constants are created "like" an existing value.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};
use std::fmt::Debug;

pub trait Field: Clone + Debug + PartialOrd + Send + Sync {
    fn int_like(&self, v: i64) -> Self;
    fn ratio_like(&self, p: i64, q: i64) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Text form used in reports (exact for rationals).
    fn render(&self) -> String;
    fn is_exact() -> bool {
        false
    }

    fn zero_like(&self) -> Self {
        self.int_like(0)
    }
    fn one_like(&self) -> Self {
        self.int_like(1)
    }
    fn is_negative(&self) -> bool {
        *self < self.zero_like()
    }
    fn is_positive(&self) -> bool {
        *self > self.zero_like()
    }
    fn recip(&self) -> Self {
        self.one_like().over(self)
    }
}

pub trait Real: Field {
    fn from_f64_like(&self, x: f64) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;
    fn pi_like(&self) -> Self;
    /// Relative spacing of the working precision.
    fn unit_roundoff(&self) -> f64;
    /// Smallest magnitude used as an underflow floor.
    fn tiny_like(&self) -> Self;
}

impl Field for f64 {
    fn int_like(&self, v: i64) -> Self {
        v as f64
    }
    fn ratio_like(&self, p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn render(&self) -> String {
        format!("{:e}", self)
    }
}

impl Real for f64 {
    fn from_f64_like(&self, x: f64) -> Self {
        x
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn pi_like(&self) -> Self {
        std::f64::consts::PI
    }
    fn unit_roundoff(&self) -> f64 {
        f64::EPSILON
    }
    fn tiny_like(&self) -> Self {
        1e-300
    }
}

impl Field for Float {
    fn int_like(&self, v: i64) -> Self {
        Float::with_val(self.prec(), v)
    }
    fn ratio_like(&self, p: i64, q: i64) -> Self {
        Float::with_val(self.prec(), Rational::from((p, q)))
    }
    fn plus(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self + o)
    }
    fn minus(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self - o)
    }
    fn times(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self * o)
    }
    fn over(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self / o)
    }
    fn negated(&self) -> Self {
        Float::with_val(self.prec(), -self)
    }
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        Float::to_f64(self)
    }
    fn render(&self) -> String {
        let d = (self.prec() as f64 / std::f64::consts::LOG2_10).floor() as usize;
        self.to_string_radix(10, Some(d.max(1)))
    }
}

impl Real for Float {
    fn from_f64_like(&self, x: f64) -> Self {
        Float::with_val(self.prec(), x)
    }
    fn sqrt(&self) -> Self {
        Float::with_val(self.prec(), self.sqrt_ref())
    }
    fn abs(&self) -> Self {
        Float::with_val(self.prec(), self.abs_ref())
    }
    fn is_finite(&self) -> bool {
        Float::is_finite(self)
    }
    fn pi_like(&self) -> Self {
        Float::with_val(self.prec(), Constant::Pi)
    }
    fn unit_roundoff(&self) -> f64 {
        2f64.powi(1 - self.prec() as i32)
    }
    fn tiny_like(&self) -> Self {
        Float::with_val(self.prec(), Float::parse("1e-100000").unwrap())
    }
}

impl Field for Rational {
    fn int_like(&self, v: i64) -> Self {
        Rational::from(v)
    }
    fn ratio_like(&self, p: i64, q: i64) -> Self {
        Rational::from((p, q))
    }
    fn plus(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn minus(&self, o: &Self) -> Self {
        Rational::from(self - o)
    }
    fn times(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
    fn over(&self, o: &Self) -> Self {
        Rational::from(self / o)
    }
    fn negated(&self) -> Self {
        Rational::from(-self)
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn render(&self) -> String {
        self.to_string()
    }
    fn is_exact() -> bool {
        true
    }
}

/// Binary precision carrying `digits` significant decimal digits plus guard bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 16
}

/// A `Float` holding `x` at `digits` decimal digits.
pub fn hp(digits: u32, x: f64) -> Float {
    Float::with_val(bits_for_digits(digits), x)
}

/// A `Float` holding the exact rational `p/q` rounded at `digits` decimal digits.
pub fn hp_ratio(digits: u32, p: i64, q: i64) -> Float {
    Float::with_val(bits_for_digits(digits), Rational::from((p, q)))
}

/// Parse a decimal string such as "0.1" or "1/3" into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: rug::Integer = p.trim().parse().ok()?;
        let q: rug::Integer = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Rational::from((p, q)));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", ip, fp);
    let num: rug::Integer = if digits.is_empty() { 0.into() } else { digits.parse().ok()? };
    let scale = exp - fp.len() as i32;
    let mut r = Rational::from(num);
    let ten = rug::Integer::from(10);
    if scale >= 0 {
        r *= Rational::from(ten.pow(scale as u32));
    } else {
        r /= Rational::from(ten.pow((-scale) as u32));
    }
    if neg {
        r = -r;
    }
    Some(r)
}
