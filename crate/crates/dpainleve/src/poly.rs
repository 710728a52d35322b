//! Dense univariate polynomials with big-integer coefficients and exact
//! rational functions built from them.

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Coefficients in ascending order; no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPoly {
    c: Vec<Integer>,
}

impl IntPoly {
    pub fn new(mut c: Vec<Integer>) -> Self {
        while c.last().is_some_and(|x| *x == 0) {
            c.pop();
        }
        IntPoly { c }
    }
    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| Integer::from(x)).collect())
    }
    pub fn zero() -> Self {
        IntPoly { c: vec![] }
    }
    pub fn constant(v: impl Into<Integer>) -> Self {
        Self::new(vec![v.into()])
    }
    /// The monomial c·x^k.
    pub fn monomial(coef: impl Into<Integer>, k: usize) -> Self {
        let mut c = vec![Integer::new(); k];
        c.push(coef.into());
        Self::new(c)
    }
    pub fn coeffs(&self) -> &[Integer] {
        &self.c
    }
    pub fn coeff(&self, i: usize) -> Integer {
        self.c.get(i).cloned().unwrap_or_default()
    }
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }
    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }
    pub fn lead(&self) -> Integer {
        self.c.last().cloned().unwrap_or_default()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        Self::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        Self::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
    pub fn neg(&self) -> Self {
        Self::new(self.c.iter().map(|x| Integer::from(-x)).collect())
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut r = vec![Integer::new(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                r[i + j] += Integer::from(a * b);
            }
        }
        Self::new(r)
    }
    pub fn scale(&self, k: &Integer) -> Self {
        Self::new(self.c.iter().map(|x| Integer::from(x * k)).collect())
    }
    /// Multiply by x^k.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Integer::new(); k];
        c.extend(self.c.iter().cloned());
        Self::new(c)
    }
    /// Divide every coefficient by `k`, which must divide all of them.
    pub fn div_exact_int(&self, k: &Integer) -> Self {
        Self::new(self.c.iter().map(|x| Integer::from(x.div_exact_ref(k))).collect())
    }
    /// gcd of the coefficients (non-negative).
    pub fn content(&self) -> Integer {
        let mut g = Integer::new();
        for x in &self.c {
            g.gcd_mut(x);
            if g == 1 {
                break;
            }
        }
        g
    }
    /// Primitive part with positive leading coefficient.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut g = self.content();
        if self.lead() < 0 {
            g = -g;
        }
        self.div_exact_int(&g)
    }

    /// Pseudo-remainder of self by d: lc(d)^(deg self − deg d + 1)·self mod d.
    pub fn pseudo_rem(&self, d: &Self) -> Self {
        let dd = d.degree().expect("division by zero polynomial");
        let lc = d.lead();
        let mut r = self.clone();
        while let Some(dr) = r.degree() {
            if dr < dd {
                break;
            }
            let t = r.lead();
            r = r.scale(&lc).sub(&d.scale(&t).shift(dr - dd));
        }
        r
    }

    /// Exact quotient self / d; panics if the division is not exact over ℤ.
    pub fn div_exact(&self, d: &Self) -> Self {
        let dd = d.degree().expect("division by zero polynomial");
        let lc = d.lead();
        let mut r = self.clone();
        let mut q = vec![Integer::new(); self.c.len().saturating_sub(dd).max(1)];
        while let Some(dr) = r.degree() {
            if dr < dd {
                break;
            }
            let (t, rem) = r.lead().div_rem(lc.clone());
            assert!(rem == 0, "inexact polynomial division");
            q[dr - dd] = t.clone();
            r = r.sub(&d.scale(&t).shift(dr - dd));
        }
        assert!(r.is_zero(), "inexact polynomial division");
        Self::new(q)
    }

    /// Primitive gcd with positive leading coefficient (primitive PRS).
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.primitive(), o.primitive());
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive();
            a = b;
            b = r;
        }
        a
    }

    pub fn eval_rational(&self, x: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.c.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64())
    }
    pub fn eval_float(&self, x: &rug::Float) -> rug::Float {
        let mut acc = rug::Float::new(x.prec());
        for c in self.c.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.c.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let sign = if *c < 0 { "-" } else if first { "" } else { "+" };
            let a = Integer::from(c.abs_ref());
            let body = match (i, a == 1) {
                (0, _) => a.to_string(),
                (1, true) => "e".to_string(),
                (1, false) => format!("{a}*e"),
                (_, true) => format!("e^{i}"),
                (_, false) => format!("{a}*e^{i}"),
            };
            write!(f, "{sign}{body}")?;
            first = false;
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.c.iter().map(|x| x.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let c = v
            .iter()
            .map(|s| s.parse::<Integer>().map_err(serde::de::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntPoly::new(c))
    }
}

/// p/q with gcd(p, q) = 1, joint content 1 and positive leading coefficient of q.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalFunc {
    num: IntPoly,
    den: IntPoly,
}

impl RationalFunc {
    pub fn new(num: IntPoly, den: IntPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RationalFunc { num, den: IntPoly::constant(1) };
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.degree() == Some(0) { (num, den) } else { (num.div_exact(&g), den.div_exact(&g)) };
        let mut c = num.content();
        c.gcd_mut(&den.content());
        if den.lead() < 0 {
            c = -c;
        }
        if c != 1 {
            num = num.div_exact_int(&c);
            den = den.div_exact_int(&c);
        }
        RationalFunc { num, den }
    }
    pub fn from_poly(p: IntPoly) -> Self {
        RationalFunc { num: p, den: IntPoly::constant(1) }
    }
    pub fn constant(v: i64) -> Self {
        Self::from_poly(IntPoly::constant(v))
    }
    pub fn num(&self) -> &IntPoly {
        &self.num
    }
    pub fn den(&self) -> &IntPoly {
        &self.den
    }
    /// max(deg p, deg q).
    pub fn degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }
    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }
    pub fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }
    pub fn mul_poly(&self, p: &IntPoly) -> Self {
        Self::new(self.num.mul(p), self.den.clone())
    }
    /// 1/self; `None` if self is identically zero.
    pub fn recip(&self) -> Option<Self> {
        if self.num.is_zero() {
            None
        } else {
            Some(Self::new(self.den.clone(), self.num.clone()))
        }
    }
    /// Exact value; `None` at a pole.
    pub fn eval_rational(&self, x: &Rational) -> Option<Rational> {
        let d = self.den.eval_rational(x);
        if d == 0 {
            return None;
        }
        Some(self.num.eval_rational(x) / d)
    }
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }
    /// Taylor coefficients at 0 up to x^order; requires q(0) ≠ 0.
    pub fn taylor(&self, order: usize) -> Option<Vec<Rational>> {
        let q0 = self.den.coeff(0);
        if q0 == 0 {
            return None;
        }
        let mut out: Vec<Rational> = Vec::with_capacity(order + 1);
        for i in 0..=order {
            let mut s = Rational::from(self.num.coeff(i));
            for j in 1..=i {
                let qj = self.den.coeff(j);
                if qj != 0 {
                    s -= &out[i - j] * Rational::from(qj);
                }
            }
            out.push(s / Rational::from(q0.clone()));
        }
        Some(out)
    }
}

impl fmt::Display for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}
