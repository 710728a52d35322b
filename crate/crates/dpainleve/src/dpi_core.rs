//! The dP_I recurrence v_{n+1} + v_{n-1} + 1 = ε(n+1)/v_n with v_{-1} = 0.

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    /// The value past the right edge is taken as 0.
    Free,
    /// The value past the right edge is the square-root approximation.
    ClampApprox,
}

/// A truncated orbit (v_{-1}, v_0, ..., v_N).
#[derive(Debug, Clone)]
pub struct Sequence<S> {
    eps: S,
    values: Vec<S>,
    boundary: BoundaryPolicy,
    overflow_at: Option<i64>,
}

impl<S: Field> Sequence<S> {
    /// `values[0]` is v_{-1}.
    pub fn new(eps: S, values: Vec<S>, boundary: BoundaryPolicy) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::Domain("eps must be positive".into()));
        }
        if values.is_empty() {
            return Err(Error::Invalid("sequence needs the n = -1 slot".into()));
        }
        Ok(Sequence { eps, values, boundary, overflow_at: None })
    }

    /// Sequence with v_{-1} = 0 followed by `tail` = (v_0, ..., v_N).
    pub fn from_tail(eps: S, tail: Vec<S>, boundary: BoundaryPolicy) -> Result<Self> {
        let mut values = Vec::with_capacity(tail.len() + 1);
        values.push(eps.zero_like());
        values.extend(tail);
        Self::new(eps, values, boundary)
    }

    pub fn eps(&self) -> &S {
        &self.eps
    }
    pub fn boundary(&self) -> BoundaryPolicy {
        self.boundary
    }
    /// Largest stored index N.
    pub fn n_max(&self) -> i64 {
        self.values.len() as i64 - 2
    }
    /// v_n for -1 ≤ n ≤ N.
    pub fn get(&self, n: i64) -> &S {
        &self.values[(n + 1) as usize]
    }
    /// All stored values, starting at n = -1.
    pub fn values(&self) -> &[S] {
        &self.values
    }
    /// Values for n = 0..=N.
    pub fn tail(&self) -> &[S] {
        &self.values[1..]
    }
    /// First index whose magnitude left the representable range, if any.
    pub fn overflow_at(&self) -> Option<i64> {
        self.overflow_at
    }
    pub fn is_positive(&self) -> bool {
        self.tail().iter().all(|v| v.is_positive())
    }
    pub fn with_boundary(mut self, boundary: BoundaryPolicy) -> Self {
        self.boundary = boundary;
        self
    }
}

/// Forward iteration from v_{-1} = 0 and the given v_0, up to index `n`.
///
/// Iteration stops early (and records the index) when |v_n| leaves the
/// representable double range.
pub fn iterate_forward<S: Field>(eps: &S, v0: &S, n: usize) -> Result<Sequence<S>> {
    if !eps.is_positive() {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let mut values = vec![eps.zero_like(), v0.clone()];
    let mut overflow_at = None;
    for k in 0..n as i64 {
        let vk = &values[(k + 1) as usize];
        if vk.is_zero() {
            return Err(Error::ZeroDivision { n: k });
        }
        let num = eps.times(&eps.int_like(k + 1));
        let next = num.over(vk).minus(&values[k as usize]).minus(&eps.one_like());
        if !next.to_f64().is_finite() {
            overflow_at = Some(k + 1);
            break;
        }
        values.push(next);
    }
    let mut seq = Sequence::new(eps.clone(), values, BoundaryPolicy::Free)?;
    seq.overflow_at = overflow_at;
    Ok(seq)
}

/// r_n = v_n (v_{n+1} + v_{n-1} + 1) − ε(n+1) for 0 ≤ n < N.
pub fn residual<S: Field>(seq: &Sequence<S>) -> Vec<S> {
    let eps = seq.eps();
    (0..seq.n_max())
        .map(|n| {
            let s = seq.get(n + 1).plus(seq.get(n - 1)).plus(&eps.one_like());
            seq.get(n).times(&s).minus(&eps.times(&eps.int_like(n + 1)))
        })
        .collect()
}

/// (√(1 + 8(n+1)ε) − 1)/4.
pub fn approx_sqrt<S: Real>(eps: &S, n: i64) -> Result<S> {
    let rad = eps.one_like().plus(&eps.times(&eps.int_like(8 * (n + 1))));
    if rad.is_negative() {
        return Err(Error::Domain(format!("negative radicand at n = {n}")));
    }
    Ok(rad.sqrt().minus(&eps.one_like()).over(&eps.int_like(4)))
}

/// Coefficients (α̃, β̃, γ̃) of x_{n+1} + x_{n-1} = (α̃n + β̃)/x_n + γ̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralDpiParams<S> {
    pub alpha_t: S,
    pub beta_t: S,
    pub gamma_t: S,
}

impl<S: Field> GeneralDpiParams<S> {
    /// The specialization (ε, ε, −1).
    pub fn special(eps: &S) -> Self {
        GeneralDpiParams { alpha_t: eps.clone(), beta_t: eps.clone(), gamma_t: eps.int_like(-1) }
    }
}

/// r_n = x_{n+1} + x_{n-1} − (α̃n + β̃)/x_n − γ̃ for 0 ≤ n < N.
///
/// With (ε, ε, −1) this equals `residual` divided by x_n.
pub fn residual_general<S: Field>(seq: &Sequence<S>, p: &GeneralDpiParams<S>) -> Result<Vec<S>> {
    (0..seq.n_max())
        .map(|n| {
            let x = seq.get(n);
            if x.is_zero() {
                return Err(Error::ZeroDivision { n });
            }
            let num = p.alpha_t.times(&x.int_like(n)).plus(&p.beta_t);
            Ok(seq.get(n + 1).plus(seq.get(n - 1)).minus(&num.over(x)).minus(&p.gamma_t))
        })
        .collect()
}

/// Forward iteration of the general recurrence from (x_{-1}, x_0).
pub fn iterate_general<S: Field>(
    p: &GeneralDpiParams<S>,
    x_m1: &S,
    x0: &S,
    n: usize,
) -> Result<Sequence<S>> {
    let mut values = vec![x_m1.clone(), x0.clone()];
    for k in 0..n as i64 {
        let x = &values[(k + 1) as usize];
        if x.is_zero() {
            return Err(Error::ZeroDivision { n: k });
        }
        let num = p.alpha_t.times(&x.int_like(k)).plus(&p.beta_t);
        let next = num.over(x).plus(&p.gamma_t).minus(&values[k as usize]);
        values.push(next);
    }
    let eps = p.beta_t.clone();
    let eps = if eps.is_positive() { eps } else { x0.one_like() };
    Sequence::new(eps, values, BoundaryPolicy::Free)
}
