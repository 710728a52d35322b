//! The Stieltjes fraction v_0 = ε/(1 + 2ε/(1 + 4ε/(1 + 5ε/(1 + ...)))) and
//! its comparison with the bound orbit at n = 0.

use crate::error::{Error, Result};
use crate::fixed_point::BoundTable;
use crate::poly::{IntPoly, RationalFunc};
use crate::scalar::Real;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

/// (ξ_n, ζ_n): ξ_{2m} = 3m+1, ξ_{2m+1} = 3m+2, ζ_{2m} = 2, ζ_{2m+1} = 1.
pub fn xi_zeta(n: usize) -> (u64, u64) {
    let m = (n / 2) as u64;
    if n.is_multiple_of(2) {
        (3 * m + 1, 2)
    } else {
        (3 * m + 2, 1)
    }
}

/// Convergent numerators and denominators P^(k), Q^(k) for k ≤ k_max.
#[derive(Debug, Clone)]
pub struct SFraction {
    p: Vec<IntPoly>,
    q: Vec<IntPoly>,
}

impl SFraction {
    pub fn new(k_max: usize) -> Self {
        // Index shift by 2 so that slot 0 holds k = −2.
        let mut p = vec![IntPoly::constant(1), IntPoly::zero()];
        let mut q = vec![IntPoly::zero(), IntPoly::constant(1)];
        for k in 0..=k_max {
            let xe = IntPoly::monomial(xi_zeta(k).0, 1);
            p.push(p[k + 1].add(&xe.mul(&p[k])));
            q.push(q[k + 1].add(&xe.mul(&q[k])));
        }
        SFraction { p, q }
    }
    pub fn k_max(&self) -> usize {
        self.p.len() - 3
    }
    /// P^(k) for k ≥ −2.
    pub fn p(&self, k: i64) -> &IntPoly {
        &self.p[(k + 2) as usize]
    }
    /// Q^(k) for k ≥ −2.
    pub fn q(&self, k: i64) -> &IntPoly {
        &self.q[(k + 2) as usize]
    }
    pub fn convergent(&self, k: usize) -> RationalFunc {
        RationalFunc::new(self.p(k as i64).clone(), self.q(k as i64).clone())
    }
    pub fn convergent_at(&self, k: usize, eps: &Rational) -> Rational {
        self.p(k as i64).eval_rational(eps) / self.q(k as i64).eval_rational(eps)
    }
    /// ξ_0···ξ_k ε^{k+1} / (Q^(k−1) Q^(k)).
    pub fn gap_at(&self, k: usize, eps: &Rational) -> Rational {
        let mut num = Rational::from(1);
        for i in 0..=k {
            num *= Rational::from(xi_zeta(i).0) * eps;
        }
        num / (self.q(k as i64 - 1).eval_rational(eps) * self.q(k as i64).eval_rational(eps))
    }
}

/// η̄_0^(k) at rational ε.
pub fn convergent(k: usize, eps: &Rational) -> Rational {
    SFraction::new(k).convergent_at(k, eps)
}

#[derive(Debug, Clone)]
pub struct CfracValue<S> {
    pub value: S,
    /// |η̄^(k) − η̄^(k−1)|, which bounds the truncation error of η̄^(k).
    pub error_bound: f64,
    pub terms: usize,
}

pub const DEFAULT_TERM_CAP: usize = 10_000;

/// Modified Lentz evaluation until the alternating gap drops below `tol`.
pub fn eval_cfrac<S: Real>(eps: &S, tol: f64, cap: usize) -> Result<CfracValue<S>> {
    if !eps.is_positive() {
        return Err(Error::Domain("the fraction is evaluated for eps > 0 only".into()));
    }
    if tol <= 0.0 {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let tiny = eps.tiny_like();
    let one = eps.one_like();
    let mut f = tiny.clone();
    let mut c = f.clone();
    let mut d = eps.zero_like();
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    for j in 0..cap {
        let a = eps.times(&eps.int_like(xi_zeta(j).0 as i64));
        let b = if j == 0 { eps.zero_like() } else { one.clone() };
        // The leading partial denominator is 1; b_0 = 0 is the integer part.
        let bj = if j == 0 { one.clone() } else { b };
        d = bj.plus(&a.times(&d));
        if d.is_zero() {
            d = tiny.clone();
        }
        c = bj.plus(&a.over(&c));
        if c.is_zero() {
            c = tiny.clone();
        }
        d = d.recip();
        let prev = f.clone();
        f = f.times(&c.times(&d));
        if j == 0 {
            continue;
        }
        let gap = f.minus(&prev).abs().to_f64();
        if gap < tol {
            return Ok(CfracValue { value: f, error_bound: gap, terms: j + 1 });
        }
        if gap < best * (1.0 - 1e-12) {
            best = gap;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 256 {
                return Err(Error::NoConvergence { steps: j + 1, achieved: best });
            }
        }
    }
    Err(Error::NoConvergence { steps: cap, achieved: best })
}

/// s_{0,0} = 1, s_{0,i+1} = (3i+1)s_{0,i} + Σ_{j=0}^{i} s_{0,i−j}s_{0,j}.
pub fn series_s0(i_max: usize) -> Vec<Integer> {
    let mut s = vec![Integer::from(1)];
    for i in 0..i_max {
        let mut next = Integer::from(&s[i] * (3 * i as u64 + 1));
        for j in 0..=i {
            next += Integer::from(&s[i - j] * &s[j]);
        }
        s.push(next);
    }
    s
}

/// 3ε²η′ + η² + (1 − ζ_n ε)η − ξ_n ε.
pub fn riccati_residual_eta<S: Real>(n: usize, eps: &S, eta: &S, eta_prime: &S) -> S {
    let (xi, zeta) = xi_zeta(n);
    let three_e2 = eps.times(eps).times(&eps.int_like(3));
    let lin = eps.one_like().minus(&eps.times(&eps.int_like(zeta as i64)));
    three_e2
        .times(eta_prime)
        .plus(&eta.times(eta))
        .plus(&lin.times(eta))
        .minus(&eps.times(&eps.int_like(xi as i64)))
}

/// 4ε/(1+5ε) < ε/(1+2ε) + 3ε/(1+6ε).
pub fn convexity_kernel(eps: &Rational) -> bool {
    let f = |a: i64, b: i64| Rational::from(eps * a) / (Rational::from(eps * b) + 1);
    f(4, 5) < f(1, 2) + f(3, 6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

/// One comparison lhs ? rhs in the interlacing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaceLink {
    pub lhs: String,
    pub rhs: String,
    pub relation: Relation,
    /// Whether equality is admissible at this link.
    pub equality_allowed: bool,
}

impl LaceLink {
    pub fn holds(&self) -> bool {
        self.relation == Relation::Less || (self.relation == Relation::Equal && self.equality_allowed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlaceReport {
    pub eps: String,
    pub j_max: usize,
    pub links: Vec<LaceLink>,
}

impl InterlaceReport {
    pub fn all_hold(&self) -> bool {
        self.links.iter().all(LaceLink::holds)
    }
    /// Labels of the links that are equalities.
    pub fn equalities(&self) -> Vec<(String, String)> {
        self.links
            .iter()
            .filter(|l| l.relation == Relation::Equal)
            .map(|l| (l.lhs.clone(), l.rhs.clone()))
            .collect()
    }
}

fn compare(a: &Rational, b: &Rational) -> Relation {
    match a.cmp(b) {
        std::cmp::Ordering::Less => Relation::Less,
        std::cmp::Ordering::Equal => Relation::Equal,
        std::cmp::Ordering::Greater => Relation::Greater,
    }
}

/// b^(2j−1) < η̄^(2j+1) ≤ b^(2j+1) < b^(2j+2) ≤ η̄^(2j+2) < b^(2j) at n = 0, exactly.
///
/// Equality is admissible only for η̄^(k) = b^(k) with k ≤ 2.
pub fn interlace_check(eps: &Rational, j_max: usize) -> Result<InterlaceReport> {
    let kmax = 2 * j_max + 2;
    let bounds = BoundTable::compute(eps, kmax, 0)?;
    let frac = SFraction::new(kmax);
    let b = |k: i64| bounds.b(k, 0);
    let eta = |k: i64| frac.convergent_at(k as usize, eps);
    let mut links = Vec::new();
    let mut push = |lname: String, l: Rational, rname: String, r: Rational, eq: bool| {
        links.push(LaceLink { lhs: lname, rhs: rname, relation: compare(&l, &r), equality_allowed: eq });
    };
    for j in 0..=j_max as i64 {
        let (k1, k2) = (2 * j + 1, 2 * j + 2);
        push(format!("b^({})", 2 * j - 1), b(2 * j - 1), format!("eta^({k1})"), eta(k1), false);
        push(format!("eta^({k1})"), eta(k1), format!("b^({k1})"), b(k1), k1 <= 2);
        push(format!("b^({k1})"), b(k1), format!("b^({k2})"), b(k2), false);
        push(format!("b^({k2})"), b(k2), format!("eta^({k2})"), eta(k2), k2 <= 2);
        push(format!("eta^({k2})"), eta(k2), format!("b^({})", 2 * j), b(2 * j), false);
    }
    Ok(InterlaceReport { eps: eps.to_string(), j_max, links })
}

/// (−1)^k b^(k) ≤ (−1)^k η̄^(k) < (−1)^k b^(k−2) for 1 ≤ k ≤ k_max, at n = 0.
pub fn klace_check(eps: &Rational, k_max: usize) -> Result<bool> {
    let bounds = BoundTable::compute(eps, k_max, 0)?;
    let frac = SFraction::new(k_max);
    for k in 1..=k_max as i64 {
        let s = if k % 2 == 0 { 1 } else { -1 };
        let b = bounds.b(k, 0) * s;
        let e = frac.convergent_at(k as usize, eps) * s;
        let b2 = bounds.b(k - 2, 0) * s;
        if !(b <= e && e < b2) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergentRow {
    pub k: usize,
    #[serde(rename = "P")]
    pub p: String,
    #[serde(rename = "Q")]
    pub q: String,
    pub value: String,
    pub gap: String,
}

/// Rows (k, P^(k), Q^(k), η̄^(k)(ε), gap) for k ≤ k_max.
pub fn convergent_table(eps: &Rational, k_max: usize) -> Vec<ConvergentRow> {
    let f = SFraction::new(k_max);
    (0..=k_max)
        .map(|k| ConvergentRow {
            k,
            p: f.p(k as i64).to_string(),
            q: f.q(k as i64).to_string(),
            value: format!("{:.20e}", f.convergent_at(k, eps).to_f64()),
            gap: format!("{:.6e}", f.gap_at(k, eps).to_f64()),
        })
        .collect()
}

pub fn convergent_csv(eps: &Rational, k_max: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in convergent_table(eps, k_max) {
        w.serialize(r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8");
    format!("# dpainleve convergents v1 eps={eps}\n{body}")
}
