//! Modified Bessel functions at configurable precision, the combinations
//! Z_ν and f_{m,ν}, and the closed forms for v_0, v_1, v_2.
//!
//! Orders are exact rationals so that integer orders and vanishing
//! Pochhammer factors are detected exactly. Precision is passed explicitly as
//! a number of significant decimal digits.

use crate::error::{Error, Result};
use crate::scalar::bits_for_digits;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::cell::{Cell, RefCell};
use std::collections::HashMap;

pub const DEFAULT_DIGITS: u32 = 50;
const LOG10_E: f64 = std::f64::consts::LOG10_E;
const LOG10_2: f64 = std::f64::consts::LOG10_2;
const GUARD_DIGITS: u32 = 12;
const MAX_ESCALATIONS: u32 = 4;

pub(crate) fn rf(bits: u32, r: &Rational) -> Float {
    Float::with_val(bits, r)
}

/// Decimal order of magnitude of x (−∞ for 0).
pub(crate) fn log10_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log10() + e as f64 * LOG10_2
}

/// Digits lost when `result` is obtained from terms of magnitude up to `scale`.
pub(crate) fn loss_digits(scale: f64, result: &Float) -> f64 {
    (scale - log10_abs(result)).max(0.0)
}

/// Run `f` at `digits + guard` working digits, enlarging the guard while the
/// reported cancellation eats into it.
pub(crate) fn escalate<T>(digits: u32, guard: u32, mut f: impl FnMut(u32) -> Result<(T, f64)>) -> Result<T> {
    let mut extra = guard.max(GUARD_DIGITS);
    let mut last = 0.0;
    for _ in 0..MAX_ESCALATIONS {
        let (v, loss) = f(digits + extra)?;
        if loss + 5.0 < extra as f64 {
            return Ok(v);
        }
        last = loss;
        extra = (2 * extra).max(loss.ceil() as u32 + GUARD_DIGITS);
    }
    Err(Error::PrecisionLoss(format!("cancellation of {last:.0} digits exceeds the escalation budget")))
}

fn check_x(x: &Float) -> Result<()> {
    if !x.is_finite() || *x <= 0 {
        return Err(Error::Domain("Bessel argument must be positive".into()));
    }
    Ok(())
}

/// Above this argument the Hankel expansions reach `digits` digits.
pub fn hankel_threshold(digits: u32) -> f64 {
    1.16 * (digits as f64 + 8.0)
}

/// Σ (±1)^k a_k(ν)/x^k with a_k = Π_{i≤k} (4ν² − (2i−1)²)/(8i); `None` if the
/// terms start growing before reaching 2^−bits.
fn hankel_sum(nu: &Rational, x: &Float, bits: u32, alternating: bool) -> Option<Float> {
    let mu = rf(bits, &(Rational::from(nu * nu) * 4u32));
    let mut term = Float::with_val(bits, 1);
    let mut sum = term.clone();
    let mut prev = f64::INFINITY;
    for k in 1..20_000u32 {
        let odd = Float::with_val(bits, (2 * k - 1) as f64);
        let num = Float::with_val(bits, &mu - Float::with_val(bits, odd.square_ref()));
        term *= num;
        term /= Float::with_val(bits, x * (8 * k));
        if alternating {
            term = -term;
        }
        if term.is_zero() {
            return Some(sum);
        }
        sum += &term;
        let mag = log10_abs(&term);
        if mag < log10_abs(&sum) - bits as f64 * LOG10_2 {
            return Some(sum);
        }
        if mag > prev {
            return None;
        }
        prev = mag;
    }
    None
}

/// Σ_k (x/2)^{2k+ν}/(k! Γ(k+ν+1)); ν must not be a negative integer.
fn i_series(nu: &Rational, x: &Float, bits: u32) -> Float {
    let wb = bits + 32 + (x.to_f64().max(1.0).log2() as u32) * 2;
    let nu_f = rf(wb, nu);
    let half = Float::with_val(wb, x / 2u32);
    let q = Float::with_val(wb, half.square_ref());
    let gamma = Float::with_val(wb, Float::with_val(wb, &nu_f + 1u32).gamma_ref());
    let mut term = Float::with_val(wb, (&half).pow(&nu_f)) / gamma;
    let mut sum = term.clone();
    let k_min = (-nu.to_f64()).max(0.0) as u32 + 1;
    for k in 1u32.. {
        let den = Float::with_val(wb, &nu_f + k) * k;
        term *= &q;
        term /= den;
        sum += &term;
        if k > k_min && log10_abs(&term) < log10_abs(&sum) - wb as f64 * LOG10_2 {
            break;
        }
    }
    Float::with_val(bits, sum)
}

/// I_ν(x).
pub fn bessel_i(nu: &Rational, x: &Float, digits: u32) -> Result<Float> {
    check_x(x)?;
    let bits = bits_for_digits(digits);
    let nu = if nu.is_integer() && *nu < 0 { Rational::from(-nu) } else { nu.clone() };
    if x.to_f64() >= hankel_threshold(digits) {
        let wb = bits + 32;
        let xw = Float::with_val(wb, x);
        if let Some(s) = hankel_sum(&nu, &xw, wb, true) {
            let two_pi_x = Float::with_val(wb, Float::with_val(wb, Constant::Pi) * &xw) * 2u32;
            let pre = Float::with_val(wb, xw.exp_ref()) / two_pi_x.sqrt();
            return Ok(Float::with_val(bits, pre * s));
        }
    }
    Ok(i_series(&nu, &Float::with_val(bits + 32, x), bits))
}

/// e^{−x} I_ν(x).
pub fn bessel_i_scaled(nu: &Rational, x: &Float, digits: u32) -> Result<Float> {
    let bits = bits_for_digits(digits);
    let i = bessel_i(nu, x, digits + 2)?;
    Ok(Float::with_val(bits, i * Float::with_val(bits + 16, Float::with_val(bits + 16, -x).exp())))
}

/// K_ν(x).
pub fn bessel_k(nu: &Rational, x: &Float, digits: u32) -> Result<Float> {
    check_x(x)?;
    let bits = bits_for_digits(digits);
    let nu = Rational::from(nu.abs_ref());
    let xf = x.to_f64();
    if xf >= hankel_threshold(digits) {
        let wb = bits + 32;
        let xw = Float::with_val(wb, x);
        if let Some(s) = hankel_sum(&nu, &xw, wb, false) {
            let pi = Float::with_val(wb, Constant::Pi);
            let pre = Float::with_val(wb, pi / Float::with_val(wb, &xw * 2u32)).sqrt();
            let e = Float::with_val(wb, Float::with_val(wb, -&xw).exp());
            return Ok(Float::with_val(bits, pre * e * s));
        }
    }
    let cancel = (2.0 * xf * LOG10_E).ceil() as u32;
    if nu.is_integer() {
        let n = nu.numer().to_u32().ok_or_else(|| Error::Domain("order too large".into()))?;
        return escalate(digits, cancel + GUARD_DIGITS, |w| k_integer_series(n, x, w))
            .map(|v| Float::with_val(bits, v));
    }
    escalate(digits, cancel + GUARD_DIGITS, |w| {
        let wb = bits_for_digits(w);
        let xw = Float::with_val(wb, x);
        let ip = i_series(&nu, &xw, wb);
        let im = i_series(&Rational::from(-&nu), &xw, wb);
        let scale = log10_abs(&ip).max(log10_abs(&im));
        let diff = Float::with_val(wb, &im - &ip);
        let pi = Float::with_val(wb, Constant::Pi);
        let s = Float::with_val(wb, Float::with_val(wb, &pi * rf(wb, &nu)).sin_ref());
        let k = Float::with_val(wb, &diff * pi) / (s * 2u32);
        Ok((k, loss_digits(scale, &diff)))
    })
    .map(|v| Float::with_val(bits, v))
}

/// e^{x} K_ν(x).
pub fn bessel_k_scaled(nu: &Rational, x: &Float, digits: u32) -> Result<Float> {
    let bits = bits_for_digits(digits);
    let k = bessel_k(nu, x, digits + 2)?;
    Ok(Float::with_val(bits, k * Float::with_val(bits + 16, x.exp_ref())))
}

/// K_n(x) for integer n ≥ 0 by the logarithmic series, with its cancellation.
fn k_integer_series(n: u32, x: &Float, digits: u32) -> Result<(Float, f64)> {
    let wb = bits_for_digits(digits) + 32;
    let half = Float::with_val(wb, x / 2u32);
    let q = Float::with_val(wb, half.square_ref());
    let euler = Float::with_val(wb, Constant::Euler);
    // Finite part: ½(x/2)^{−n} Σ_{k<n} (n−k−1)!/k! (−q)^k.
    let mut a = Float::with_val(wb, 0);
    for k in 0..n {
        let c = Integer::from(Integer::factorial(n - k - 1)) ;
        let kf = Integer::from(Integer::factorial(k));
        let mut t = Float::with_val(wb, &c) / Float::with_val(wb, &kf);
        t *= Float::with_val(wb, (&q).pow(k as i32));
        if k % 2 == 1 {
            t = -t;
        }
        a += t;
    }
    a *= Float::with_val(wb, (&half).pow(-(n as i32)));
    a /= 2u32;
    // Logarithmic part: (−1)^{n+1} ln(x/2) I_n(x).
    let i_n = i_series(&Rational::from(n), x, wb);
    let mut b = Float::with_val(wb, half.ln_ref()) * i_n;
    if n.is_multiple_of(2) {
        b = -b;
    }
    // Digamma part: (−1)^n ½ (x/2)^n Σ (ψ(k+1)+ψ(n+k+1)) q^k/(k!(n+k)!).
    let mut h_k = Float::with_val(wb, 0);
    let mut h_nk = Float::with_val(wb, 0);
    for i in 1..=n {
        h_nk += Float::with_val(wb, 1) / i;
    }
    let mut term = Float::with_val(wb, 1) / Float::with_val(wb, Integer::from(Integer::factorial(n)));
    let mut c = Float::with_val(wb, 0);
    for k in 0u32.. {
        if k > 0 {
            h_k += Float::with_val(wb, 1) / k;
            h_nk += Float::with_val(wb, 1) / (n + k);
            term *= &q;
            term /= Float::with_val(wb, k) * (n + k);
        }
        let psi = Float::with_val(wb, &h_k + &h_nk) - Float::with_val(wb, &euler * 2u32);
        let t = Float::with_val(wb, &psi * &term);
        c += &t;
        if k > 2 && log10_abs(&t) < log10_abs(&c) - wb as f64 * LOG10_2 {
            break;
        }
    }
    c *= Float::with_val(wb, (&half).pow(n as i32));
    c /= 2u32;
    if n % 2 == 1 {
        c = -c;
    }
    let scale = log10_abs(&a).max(log10_abs(&b)).max(log10_abs(&c));
    let k = Float::with_val(wb, &a + &b) + c;
    let loss = loss_digits(scale, &k);
    Ok((k, loss))
}

/// The constants (d1, d2) of Z_ν = d1 I_ν + d2 I_{−ν}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BesselCoeffs {
    pub d1: Rational,
    pub d2: Rational,
}

impl BesselCoeffs {
    pub fn new(d1: Rational, d2: Rational) -> Result<Self> {
        if d1 == 0 && d2 == 0 {
            return Err(Error::Domain("(d1, d2) must not both vanish".into()));
        }
        Ok(BesselCoeffs { d1, d2 })
    }
    /// (1, −1): the branch of the positive dP_I solution, equivalent to
    /// (C1, C2) = (0, 1).
    pub fn positive() -> Self {
        BesselCoeffs { d1: Rational::from(1), d2: Rational::from(-1) }
    }
    pub fn swapped(&self) -> Self {
        BesselCoeffs { d1: self.d2.clone(), d2: self.d1.clone() }
    }
}

/// Z_ν(x): d1 I_ν + d2 I_{−ν} at non-integer ν, d1 I_j + d2 (−1)^j K_j at ν = j.
pub fn z_value(nu: &Rational, x: &Float, coeffs: &BesselCoeffs, digits: u32) -> Result<Float> {
    let bits = bits_for_digits(digits);
    escalate(digits, GUARD_DIGITS, |w| {
        let wb = bits_for_digits(w);
        let (a, b) = if nu.is_integer() {
            let j = nu.numer().to_i64().unwrap_or(0);
            let i = bessel_i(nu, x, w)?;
            let mut k = bessel_k(nu, x, w)?;
            if j % 2 != 0 {
                k = -k;
            }
            (rf(wb, &coeffs.d1) * i, rf(wb, &coeffs.d2) * k)
        } else {
            // I_{−ν} = I_ν + (2 sin νπ/π) K_ν avoids the cancellation of the direct sum.
            let i = bessel_i(nu, x, w)?;
            let k = bessel_k(nu, x, w)?;
            let pi = Float::with_val(wb, Constant::Pi);
            let s = Float::with_val(wb, Float::with_val(wb, &pi * rf(wb, nu)).sin_ref()) * 2u32 / pi;
            let sum = Rational::from(&coeffs.d1 + &coeffs.d2);
            (rf(wb, &sum) * i, rf(wb, &coeffs.d2) * s * k)
        };
        let scale = log10_abs(&a).max(log10_abs(&b));
        let z = Float::with_val(wb, &a + &b);
        let loss = if a.is_zero() || b.is_zero() { 0.0 } else { loss_digits(scale, &z) };
        Ok((z, loss))
    })
    .map(|v| Float::with_val(bits, v))
}

/// (a)_n = a(a+1)···(a+n−1).
pub fn pochhammer(a: &Rational, n: u32) -> Rational {
    let mut p = Rational::from(1);
    for i in 0..n {
        p *= Rational::from(a + i);
    }
    p
}

fn binomial(n: u32, k: u32) -> Rational {
    Rational::from(Integer::from(Integer::binomial_u(n, k)))
}

/// Exact coefficient of Z_{order} in f_{m,ν}, with the power of t.
///
/// f_{m,ν}(t) = t^{power} Σ_j coef_j Z_{order_j}(t/2).
pub fn f_terms(m: i64, nu: &Rational) -> Result<(Rational, Vec<(Rational, Rational)>)> {
    let mut terms = Vec::new();
    if m >= 0 {
        let mu = m as u32;
        for j in 0..=mu {
            let den = pochhammer(&(Rational::from(nu * 2u32) + j), mu + 1);
            if den == 0 {
                return Err(Error::SingularCoefficient(format!("({j}+2ν)_{} = 0 at ν = {nu}", mu + 1)));
            }
            let mut c = binomial(mu, j) * Rational::from(nu + j) / den;
            if j % 2 == 1 {
                c = -c;
            }
            terms.push((Rational::from(nu + j), c));
        }
        Ok((Rational::from(-nu), terms))
    } else {
        let mu = (-m) as u32;
        for j in 0..=mu {
            let den = pochhammer(&(j - Rational::from(nu * 2u32)), mu + 1);
            if den == 0 {
                return Err(Error::SingularCoefficient(format!("({j}−2ν)_{} = 0 at ν = {nu}", mu + 1)));
            }
            let c = binomial(mu, j) * Rational::from(j - nu) / den;
            terms.push((Rational::from(nu - j), c));
        }
        Ok((Rational::from(mu - nu), terms))
    }
}

/// D^order f_{m,ν} = Σ_i c_i f_{m+i,ν}, from f′ = f/2 − (m+ν+½) f_{m+1} (m ≥ 0)
/// and f′ = f/2 + f_{m+1} (m ≤ −1).
pub fn derivative_expansion(m: i64, nu: &Rational, order: usize) -> Vec<(i64, Rational)> {
    let mut cur: Vec<(i64, Rational)> = vec![(m, Rational::from(1))];
    let half = Rational::from((1, 2));
    for _ in 0..order {
        let mut next: Vec<(i64, Rational)> = Vec::new();
        let mut add = |idx: i64, c: Rational| match next.iter_mut().find(|(i, _)| *i == idx) {
            Some((_, v)) => *v += c,
            None => next.push((idx, c)),
        };
        for (mm, c) in &cur {
            add(*mm, Rational::from(c * &half));
            if *mm >= 0 {
                let k = Rational::from(nu + *mm) + &half;
                add(mm + 1, -Rational::from(c * &k));
            } else {
                add(mm + 1, c.clone());
            }
        }
        next.retain(|(_, c)| *c != 0);
        cur = next;
    }
    cur.sort_by_key(|(i, _)| *i);
    cur
}

/// Evaluation context for f_{m,ν}(t) at one t, caching Z values by order.
///
/// Not shared between threads; each evaluation builds its own.
pub struct BesselContext {
    t: Float,
    x: Float,
    coeffs: BesselCoeffs,
    digits: u32,
    cache: RefCell<HashMap<Rational, Float>>,
    f_cache: RefCell<HashMap<(i64, Rational), Float>>,
    max_loss: Cell<f64>,
}

impl BesselContext {
    pub fn new(t: &Float, coeffs: &BesselCoeffs, digits: u32) -> Result<Self> {
        check_x(t)?;
        let bits = bits_for_digits(digits) + 32;
        let t = Float::with_val(bits, t);
        let x = Float::with_val(bits, &t / 2u32);
        Ok(BesselContext {
            t,
            x,
            coeffs: coeffs.clone(),
            digits,
            cache: RefCell::new(HashMap::new()),
            f_cache: RefCell::new(HashMap::new()),
            max_loss: Cell::new(0.0),
        })
    }
    pub fn digits(&self) -> u32 {
        self.digits
    }
    pub fn bits(&self) -> u32 {
        bits_for_digits(self.digits)
    }
    pub fn t(&self) -> &Float {
        &self.t
    }
    pub fn coeffs(&self) -> &BesselCoeffs {
        &self.coeffs
    }
    /// Largest cancellation (in digits) seen in f sums so far.
    pub fn max_loss(&self) -> f64 {
        self.max_loss.get()
    }
    pub(crate) fn note_loss(&self, l: f64) {
        if l > self.max_loss.get() {
            self.max_loss.set(l);
        }
    }

    /// Z_ν(t/2).
    pub fn z(&self, nu: &Rational) -> Result<Float> {
        if let Some(v) = self.cache.borrow().get(nu) {
            return Ok(v.clone());
        }
        let v = z_value(nu, &self.x, &self.coeffs, self.digits)?;
        self.cache.borrow_mut().insert(nu.clone(), v.clone());
        Ok(v)
    }

    /// f_{m,ν}(t).
    pub fn f(&self, m: i64, nu: &Rational) -> Result<Float> {
        let key = (m, nu.clone());
        if let Some(v) = self.f_cache.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = self.f_uncached(m, nu)?;
        self.f_cache.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    fn f_uncached(&self, m: i64, nu: &Rational) -> Result<Float> {
        let bits = self.bits();
        let (power, terms) = f_terms(m, nu)?;
        let mut sum = Float::with_val(bits, 0);
        let mut scale = f64::NEG_INFINITY;
        for (order, c) in &terms {
            let term = rf(bits, c) * self.z(order)?;
            scale = scale.max(log10_abs(&term));
            sum += term;
        }
        if terms.len() > 1 {
            self.note_loss(loss_digits(scale, &sum));
        }
        let pw = Float::with_val(bits, (&self.t).pow(&rf(bits, &power)));
        Ok(sum * pw)
    }

    /// D^order f_{m,ν}(t), expanded with the derivative rule.
    pub fn f_deriv(&self, m: i64, nu: &Rational, order: usize) -> Result<Float> {
        let bits = self.bits();
        let mut sum = Float::with_val(bits, 0);
        let mut scale = f64::NEG_INFINITY;
        for (mm, c) in derivative_expansion(m, nu, order) {
            let term = rf(bits, &c) * self.f(mm, nu)?;
            scale = scale.max(log10_abs(&term));
            sum += term;
        }
        if order > 0 {
            self.note_loss(loss_digits(scale, &sum));
        }
        Ok(sum)
    }
}

/// f_{m,ν}(t) accurate to `digits`.
pub fn f_value(m: i64, nu: &Rational, t: &Float, coeffs: &BesselCoeffs, digits: u32) -> Result<Float> {
    let bits = bits_for_digits(digits);
    escalate(digits, GUARD_DIGITS, |w| {
        let ctx = BesselContext::new(t, coeffs, w)?;
        let v = ctx.f(m, nu)?;
        Ok((v, ctx.max_loss()))
    })
    .map(|v| Float::with_val(bits, v))
}

/// f′_{m,ν}(t) from the derivative rule.
pub fn f_prime(m: i64, nu: &Rational, t: &Float, coeffs: &BesselCoeffs, digits: u32) -> Result<Float> {
    let bits = bits_for_digits(digits);
    escalate(digits, GUARD_DIGITS, |w| {
        let ctx = BesselContext::new(t, coeffs, w)?;
        let v = ctx.f_deriv(m, nu, 1)?;
        Ok((v, ctx.max_loss()))
    })
    .map(|v| Float::with_val(bits, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    I,
    K,
}

/// c · I_ν(t/2) or c · K_ν(t/2).
#[derive(Debug, Clone)]
pub struct BesselTerm {
    pub kind: BesselKind,
    pub order: Rational,
    pub coef: Rational,
}

impl BesselTerm {
    pub fn i(order: (i64, i64), coef: &Rational) -> Self {
        BesselTerm { kind: BesselKind::I, order: Rational::from(order), coef: coef.clone() }
    }
    pub fn k(order: (i64, i64), coef: &Rational) -> Self {
        BesselTerm { kind: BesselKind::K, order: Rational::from(order), coef: coef.clone() }
    }
}

/// Value and first two t-derivatives of Σ c F_ν(t/2).
///
/// Uses F′ = F_{ν+1} + (ν/x)F for I, F′ = −K_{ν+1} + (ν/x)K for K, and the
/// modified Bessel equation for F″.
pub fn combo_jet(terms: &[BesselTerm], t: &Float, digits: u32) -> Result<[Float; 3]> {
    let w = digits + 2 * GUARD_DIGITS;
    let bits = bits_for_digits(w);
    let x = Float::with_val(bits, t / 2u32);
    let mut out = [Float::with_val(bits, 0), Float::with_val(bits, 0), Float::with_val(bits, 0)];
    for term in terms {
        let up = Rational::from(&term.order + 1u32);
        let (f, f_up) = match term.kind {
            BesselKind::I => (bessel_i(&term.order, &x, w)?, bessel_i(&up, &x, w)?),
            BesselKind::K => (bessel_k(&term.order, &x, w)?, -bessel_k(&up, &x, w)?),
        };
        let nu = rf(bits, &term.order);
        let nu_x = Float::with_val(bits, &nu / &x);
        let d1 = f_up + Float::with_val(bits, &nu_x * &f);
        let nu_x2 = Float::with_val(bits, nu_x.square_ref());
        let d2 = Float::with_val(bits, &f * (nu_x2 + 1u32)) - Float::with_val(bits, &d1 / &x);
        let c = rf(bits, &term.coef);
        out[0] += Float::with_val(bits, &c * &f);
        out[1] += Float::with_val(bits, &c * &d1) / 2u32;
        out[2] += Float::with_val(bits, &c * &d2) / 4u32;
    }
    Ok(out)
}

/// ε = 1/(3t) and back.
pub fn t_from_eps(eps: &Float) -> Float {
    Float::with_val(eps.prec(), Float::with_val(eps.prec(), eps * 3u32).recip_ref())
}

/// (Z_{1/6}, Z_{−5/6}) jets at (C1, C2): Z_{1/6} = C1 I_{1/6} + C2 K_{1/6},
/// Z_{−5/6} = C1 I_{−5/6} − C2 K_{5/6}, argument t/2.
fn z_pair_jets(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<([Float; 3], [Float; 3])> {
    let mc2 = Rational::from(-c2);
    let z1 = combo_jet(&[BesselTerm::i((1, 6), c1), BesselTerm::k((1, 6), c2)], t, digits)?;
    let z5 = combo_jet(&[BesselTerm::i((-5, 6), c1), BesselTerm::k((5, 6), &mc2)], t, digits)?;
    Ok((z1, z5))
}

fn work_bits(digits: u32) -> u32 {
    bits_for_digits(digits + 2 * GUARD_DIGITS)
}

/// v_0(t) = −½ − Z_{−5/6}/(2Z_{1/6}) and dv_0/dt.
pub fn v0_family_jet(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<(Float, Float)> {
    let b = work_bits(digits);
    let (z1, z5) = z_pair_jets(t, c1, c2, digits)?;
    let r = Float::with_val(b, &z5[0] / &z1[0]);
    let v = Float::with_val(b, -(Float::with_val(b, &r + 1u32))) / 2u32;
    let dr = (Float::with_val(b, &z5[1] * &z1[0]) - Float::with_val(b, &z5[0] * &z1[1])) / Float::with_val(b, z1[0].square_ref());
    let dv = -dr / 2u32;
    let bits = bits_for_digits(digits);
    Ok((Float::with_val(bits, v), Float::with_val(bits, dv)))
}

pub fn v0_family(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<Float> {
    Ok(v0_family_jet(t, c1, c2, digits)?.0)
}

/// v_1(t) = −1 − 2Z_{1/6}/(3t(Z_{1/6} + Z_{−5/6})) and dv_1/dt.
pub fn v1_family_jet(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<(Float, Float)> {
    let b = work_bits(digits);
    let (z1, z5) = z_pair_jets(t, c1, c2, digits)?;
    let tw = Float::with_val(b, t);
    let s = Float::with_val(b, &z1[0] + &z5[0]);
    let ds = Float::with_val(b, &z1[1] + &z5[1]);
    // q = Z1/(t s); v = −1 − (2/3) q.
    let ts = Float::with_val(b, &tw * &s);
    let q = Float::with_val(b, &z1[0] / &ts);
    let dts = Float::with_val(b, &s + Float::with_val(b, &tw * &ds));
    let dq = (Float::with_val(b, &z1[1] * &ts) - Float::with_val(b, &z1[0] * &dts)) / Float::with_val(b, ts.square_ref());
    let v = -Float::with_val(b, &q * 2u32) / 3u32 - 1u32;
    let dv = -(dq * 2u32) / 3u32;
    let bits = bits_for_digits(digits);
    Ok((Float::with_val(bits, v), Float::with_val(bits, dv)))
}

pub fn v1_family(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<Float> {
    Ok(v1_family_jet(t, c1, c2, digits)?.0)
}

/// v_2(t) = −3(t+2)/(2(3t+2)) + Z_{−5/6}/(2Z_{1/6}) − 4Z_{−5/6}/((3t+2)((3t+2)Z_{1/6} + 3tZ_{−5/6})).
pub fn v2_family(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<Float> {
    let b = work_bits(digits);
    let (z1, z5) = z_pair_jets(t, c1, c2, digits)?;
    let tw = Float::with_val(b, t);
    let a = Float::with_val(b, &tw * 3u32) + 2u32;
    let first = -(Float::with_val(b, &tw + 2u32) * 3u32) / (Float::with_val(b, &a * 2u32));
    let second = Float::with_val(b, &z5[0] / &z1[0]) / 2u32;
    let inner = Float::with_val(b, &a * &z1[0]) + Float::with_val(b, &tw * 3u32) * &z5[0];
    let third = Float::with_val(b, &z5[0] * 4u32) / (Float::with_val(b, &a * &inner));
    Ok(Float::with_val(bits_for_digits(digits), first + second - third))
}

fn positive_pair() -> (Rational, Rational) {
    (Rational::from(0), Rational::from(1))
}

fn check_eps(eps: &Float) -> Result<()> {
    if !eps.is_finite() || *eps <= 0 {
        return Err(Error::Domain("eps must be positive".into()));
    }
    Ok(())
}

fn eps_to_t(eps: &Float, digits: u32) -> Float {
    let b = work_bits(digits);
    Float::with_val(b, Float::with_val(b, eps * 3u32).recip_ref())
}

/// v_0(ε) = (K_{5/6}(t/2)/K_{1/6}(t/2) − 1)/2, t = 1/(3ε).
pub fn v0_closed(eps: &Float, digits: u32) -> Result<Float> {
    check_eps(eps)?;
    let t = eps_to_t(eps, digits);
    let bits = bits_for_digits(digits);
    let w = digits + GUARD_DIGITS;
    let x = Float::with_val(work_bits(digits), &t / 2u32);
    let k5 = bessel_k(&Rational::from((5, 6)), &x, w)?;
    let k1 = bessel_k(&Rational::from((1, 6)), &x, w)?;
    Ok(Float::with_val(bits, (k5 / k1 - 1u32) / 2u32))
}

pub fn v1_closed(eps: &Float, digits: u32) -> Result<Float> {
    check_eps(eps)?;
    let (c1, c2) = positive_pair();
    v1_family(&eps_to_t(eps, digits), &c1, &c2, digits)
}

pub fn v2_closed(eps: &Float, digits: u32) -> Result<Float> {
    check_eps(eps)?;
    let (c1, c2) = positive_pair();
    v2_family(&eps_to_t(eps, digits), &c1, &c2, digits)
}

/// 2v_0 + 1 = (K_{5/6} − λ I_{−5/6})/(K_{1/6} + λ I_{1/6}) at t/2, t = 1/(3ε).
pub fn v0_lambda(eps: &Float, lambda: &Float, digits: u32) -> Result<Float> {
    check_eps(eps)?;
    let (k5, k1, im5, i1) = lambda_parts(eps, digits)?;
    let b = work_bits(digits);
    let lam = Float::with_val(b, lambda);
    let num = k5 - Float::with_val(b, &lam * &im5);
    let den = k1.clone() + Float::with_val(b, &lam * &i1);
    let scale = log10_abs(&k1).max(log10_abs(&Float::with_val(b, &lam * &i1)));
    if den.is_zero() || loss_digits(scale, &den) > (digits + GUARD_DIGITS) as f64 {
        return Err(Error::PoleEncountered { k: 0, z: format!("lambda = {}", lambda.to_f64()) });
    }
    Ok(Float::with_val(bits_for_digits(digits), (num / den - 1u32) / 2u32))
}

/// Inverse of `v0_lambda` in λ.
pub fn lambda_from_v0(eps: &Float, v0: &Float, digits: u32) -> Result<Float> {
    check_eps(eps)?;
    let (k5, k1, im5, i1) = lambda_parts(eps, digits)?;
    let b = work_bits(digits);
    let w = Float::with_val(b, v0 * 2u32) + 1u32;
    let num = k5 - Float::with_val(b, &w * &k1);
    let den = Float::with_val(b, &w * &i1) + im5;
    if den.is_zero() {
        return Err(Error::PoleEncountered { k: 0, z: format!("v0 = {}", v0.to_f64()) });
    }
    Ok(Float::with_val(bits_for_digits(digits), num / den))
}

fn lambda_parts(eps: &Float, digits: u32) -> Result<(Float, Float, Float, Float)> {
    let w = digits + GUARD_DIGITS;
    let t = eps_to_t(eps, digits);
    let x = Float::with_val(work_bits(digits), &t / 2u32);
    Ok((
        bessel_k(&Rational::from((5, 6)), &x, w)?,
        bessel_k(&Rational::from((1, 6)), &x, w)?,
        bessel_i(&Rational::from((-5, 6)), &x, w)?,
        bessel_i(&Rational::from((1, 6)), &x, w)?,
    ))
}

/// y_0 = −N/D with N = C1(I_{1/6} − I_{−5/6}) + C2(K_{1/6} + K_{5/6}) and
/// D = C1(I_{1/6} + I_{−5/6}) + C2(K_{1/6} − K_{5/6}); returns (y_0, y_0′).
pub fn y0_jet(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<(Float, Float)> {
    let b = work_bits(digits);
    let mc1 = Rational::from(-c1);
    let mc2 = Rational::from(-c2);
    let n = combo_jet(
        &[
            BesselTerm::i((1, 6), c1),
            BesselTerm::i((-5, 6), &mc1),
            BesselTerm::k((1, 6), c2),
            BesselTerm::k((5, 6), c2),
        ],
        t,
        digits,
    )?;
    let d = phi_core(t, c1, &mc2, c2, digits)?;
    let y = -Float::with_val(b, &n[0] / &d[0]);
    let dy = -(Float::with_val(b, &n[1] * &d[0]) - Float::with_val(b, &n[0] * &d[1])) / Float::with_val(b, d[0].square_ref());
    Ok((y, dy))
}

fn phi_core(t: &Float, c1: &Rational, mc2: &Rational, c2: &Rational, digits: u32) -> Result<[Float; 3]> {
    combo_jet(
        &[
            BesselTerm::i((1, 6), c1),
            BesselTerm::i((-5, 6), c1),
            BesselTerm::k((1, 6), c2),
            BesselTerm::k((5, 6), mc2),
        ],
        t,
        digits,
    )
}

/// t y_0′ − y_0²/3 + t y_0 + 1/3.
pub fn y0_riccati_residual(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<Float> {
    check_x(t)?;
    let b = work_bits(digits);
    let (y, dy) = y0_jet(t, c1, c2, digits)?;
    let tw = Float::with_val(b, t);
    let r = Float::with_val(b, &tw * &dy) - Float::with_val(b, y.square_ref()) / 3u32
        + Float::with_val(b, &tw * &y)
        + Float::with_val(b, 1) / 3u32;
    Ok(Float::with_val(bits_for_digits(digits), r))
}

/// φ_0 = √t e^{−t/2} G(t) with G = C1(I_{1/6} + I_{−5/6}) + C2(K_{1/6} − K_{5/6}); (φ, φ′, φ″).
pub fn phi0_jet(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<[Float; 3]> {
    check_x(t)?;
    let b = work_bits(digits);
    let mc2 = Rational::from(-c2);
    let g = phi_core(t, c1, &mc2, c2, digits)?;
    let tw = Float::with_val(b, t);
    let s = Float::with_val(b, tw.sqrt_ref()) * Float::with_val(b, -Float::with_val(b, &tw / 2u32)).exp();
    let h = Float::with_val(b, Float::with_val(b, tw.recip_ref()) / 2u32) - Float::with_val(b, 0.5);
    let s1 = Float::with_val(b, &s * &h);
    let t2 = Float::with_val(b, tw.square_ref());
    let s2 = Float::with_val(b, &s * (Float::with_val(b, h.square_ref()) - Float::with_val(b, t2.recip_ref()) / 2u32));
    let phi = Float::with_val(b, &s * &g[0]);
    let dphi = Float::with_val(b, &s1 * &g[0]) + Float::with_val(b, &s * &g[1]);
    let ddphi = Float::with_val(b, &s2 * &g[0]) + Float::with_val(b, &s1 * &g[1]) * 2u32 + Float::with_val(b, &s * &g[2]);
    Ok([phi, dphi, ddphi])
}

/// t²φ″ + t(t+1)φ′ − φ/9, relative to |φ|.
pub fn phi0_residual(t: &Float, c1: &Rational, c2: &Rational, digits: u32) -> Result<Float> {
    let b = work_bits(digits);
    let [p, dp, ddp] = phi0_jet(t, c1, c2, digits)?;
    let tw = Float::with_val(b, t);
    let r = Float::with_val(b, tw.square_ref()) * ddp + Float::with_val(b, &tw * Float::with_val(b, &tw + 1u32)) * dp
        - Float::with_val(b, &p / 9u32);
    Ok(Float::with_val(bits_for_digits(digits), r / p.abs()))
}
