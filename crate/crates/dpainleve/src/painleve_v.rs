//! Painlevé V with δ = −½: the ODE residual, the Hamiltonian system, the
//! Bäcklund transformations T_{ε1,ε2,ε3}, the parameter chain and the
//! differential-difference relations for v_n = 1/(y_n − 1).
//!
//! Algebraic maps are generic over `Field` so parameter arithmetic can be
//! exact. The adaptive integrator works in f64.

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};
use serde::Serialize;

/// BT parameters (a, b, c); PV parameters are (a²/2, −b²/2, c, −½).
#[derive(Debug, Clone, PartialEq)]
pub struct RootTriple<S> {
    pub a: S,
    pub b: S,
    pub c: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvParams<S> {
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
    pub delta: S,
}

impl<S: Field> RootTriple<S> {
    pub fn new(a: S, b: S, c: S) -> Self {
        RootTriple { a, b, c }
    }

    pub fn pv_params(&self) -> PvParams<S> {
        let two = self.a.int_like(2);
        PvParams {
            alpha: self.a.times(&self.a).over(&two),
            beta: self.b.times(&self.b).over(&two).negated(),
            gamma: self.c.clone(),
            delta: self.a.ratio_like(-1, 2),
        }
    }

    /// T_{ε1,ε2,ε3}(a, b, c) = (½(c + ε1K), ½(c − ε1K), ε1(ε3b − ε2a)), K = 1 − ε3b − ε2a.
    pub fn bt(&self, signs: Signs) -> Self {
        let (e1, e2, e3) = signs.as_like(&self.a);
        let kk = self.a.one_like().minus(&e3.times(&self.b)).minus(&e2.times(&self.a));
        let half = self.a.ratio_like(1, 2);
        let e1k = e1.times(&kk);
        RootTriple {
            a: half.times(&self.c.plus(&e1k)),
            b: half.times(&self.c.minus(&e1k)),
            c: e1.times(&e3.times(&self.b).minus(&e2.times(&self.a))),
        }
    }

    /// R = T_{−1,1,1}.
    pub fn r_forward(&self) -> Self {
        self.bt(Signs::R)
    }

    /// R⁻¹ = T_{−1,1,−1} ∘ T_{1,−1,−1} ∘ T_{1,−1,1}.
    pub fn r_inverse(&self) -> Self {
        self.bt(Signs::new(1, -1, 1)).bt(Signs::new(1, -1, -1)).bt(Signs::new(-1, 1, -1))
    }
}

/// The triple (ε1, ε2, ε3) of a BT, each ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signs(pub i8, pub i8, pub i8);

impl Signs {
    pub const R: Signs = Signs(-1, 1, 1);

    pub fn new(e1: i8, e2: i8, e3: i8) -> Self {
        assert!([e1, e2, e3].iter().all(|e| *e == 1 || *e == -1), "BT signs must be ±1");
        Signs(e1, e2, e3)
    }

    fn as_like<S: Field>(&self, x: &S) -> (S, S, S) {
        (x.int_like(self.0 as i64), x.int_like(self.1 as i64), x.int_like(self.2 as i64))
    }
}

/// (a_n, b_n, c_n) = (μ cos θ + κ sin θ + λ − n/3, √3κ cos θ − √3μ sin θ + ⅓,
/// −2μ cos θ − 2κ sin θ + λ − n/3), θ = 2πn/3.
pub fn param_evolution<S: Real>(n: i64, mu: &S, kappa: &S, lambda: &S) -> RootTriple<S> {
    // cos θ ∈ {1, −½, −½}; sin θ = ±√3/2 or 0 by residue.
    let r3 = mu.int_like(3).sqrt();
    let (cos, sin) = match n.rem_euclid(3) {
        0 => (mu.one_like(), mu.zero_like()),
        1 => (mu.ratio_like(-1, 2), r3.over(&mu.int_like(2))),
        _ => (mu.ratio_like(-1, 2), r3.over(&mu.int_like(2)).negated()),
    };
    let drift = lambda.minus(&mu.ratio_like(n, 3));
    let a = mu.times(&cos).plus(&kappa.times(&sin)).plus(&drift);
    let b = r3
        .times(&kappa.times(&cos).minus(&mu.times(&sin)))
        .plus(&mu.ratio_like(1, 3));
    let two = mu.int_like(2);
    let c = two.times(&mu.times(&cos).plus(&kappa.times(&sin))).negated().plus(&drift);
    RootTriple { a, b, c }
}

/// The chain a_n = c_n = −(n+1)/3, b_n = ⅓ (μ = κ = 0, λ = −⅓).
pub fn params_n<S: Field>(n: i64, like: &S) -> RootTriple<S> {
    RootTriple {
        a: like.ratio_like(-(n + 1), 3),
        b: like.ratio_like(1, 3),
        c: like.ratio_like(-(n + 1), 3),
    }
}

fn singular_y<S: Field>(y: &S, t: &S) -> Result<()> {
    if t.is_zero() {
        return Err(Error::SingularPoint("t = 0".into()));
    }
    if y.is_zero() || y.minus(&y.one_like()).is_zero() {
        return Err(Error::SingularPoint(format!("y = {}", y.render())));
    }
    Ok(())
}

/// Right-hand side of PV for y″.
pub fn pv_rhs<S: Field>(y: &S, yp: &S, t: &S, p: &PvParams<S>) -> Result<S> {
    singular_y(y, t)?;
    let one = y.one_like();
    let ym1 = y.minus(&one);
    let coef = y.times(&y.int_like(2)).recip().plus(&ym1.recip());
    let mut r = coef.times(&yp.times(yp));
    r = r.minus(&yp.over(t));
    let poly = p.alpha.times(&y.times(y)).plus(&p.beta);
    r = r.plus(&ym1.times(&ym1).times(&poly).over(&t.times(t).times(y)));
    r = r.plus(&p.gamma.times(y).over(t));
    r = r.plus(&p.delta.times(&y.times(&y.plus(&one))).over(&ym1));
    Ok(r)
}

/// y″ − RHS of PV.
pub fn pv_residual<S: Field>(y: &S, yp: &S, ypp: &S, t: &S, p: &PvParams<S>) -> Result<S> {
    Ok(ypp.minus(&pv_rhs(y, yp, t, p)?))
}

/// T_{ε1,ε2,ε3}(y) = 1 − 2ε1ty/(ty′ − ε2ay² + (ε2a − ε3b + ε1t)y + ε3b) and the mapped triple.
pub fn bt_apply<S: Field>(y: &S, yp: &S, t: &S, triple: &RootTriple<S>, signs: Signs) -> Result<(S, RootTriple<S>)> {
    let (e1, _, _) = signs.as_like(y);
    let d = bt_denominator(y, yp, t, triple, signs);
    if d.is_zero() {
        return Err(Error::PoleEncountered { k: 0, z: format!("t = {}", t.render()) });
    }
    let y_new = y.one_like().minus(&y.int_like(2).times(&e1).times(t).times(y).over(&d));
    Ok((y_new, triple.bt(signs)))
}

fn bt_denominator<S: Field>(y: &S, yp: &S, t: &S, tr: &RootTriple<S>, signs: Signs) -> S {
    let (e1, e2, e3) = signs.as_like(y);
    let lin = e2.times(&tr.a).minus(&e3.times(&tr.b)).plus(&e1.times(t));
    t.times(yp)
        .minus(&e2.times(&tr.a).times(&y.times(y)))
        .plus(&lin.times(y))
        .plus(&e3.times(&tr.b))
}

/// A solution germ: y, y′ at t for a given triple.
#[derive(Debug, Clone)]
pub struct Jet<S> {
    pub t: S,
    pub y: S,
    pub yp: S,
    pub triple: RootTriple<S>,
}

/// Apply T_{ε1,ε2,ε3} to a germ, using PV for y″ to carry the derivative.
pub fn bt_apply_jet<S: Field>(jet: &Jet<S>, signs: Signs) -> Result<Jet<S>> {
    let Jet { t, y, yp, triple } = jet;
    let ypp = pv_rhs(y, yp, t, &triple.pv_params())?;
    let (e1, e2, e3) = signs.as_like(y);
    let two = y.int_like(2);
    let d = bt_denominator(y, yp, t, triple, signs);
    if d.is_zero() {
        return Err(Error::PoleEncountered { k: 0, z: format!("t = {}", t.render()) });
    }
    let lin = e2.times(&triple.a).minus(&e3.times(&triple.b)).plus(&e1.times(t));
    // D′ = y′ + ty″ − 2ε2a y y′ + ε1 y + lin·y′.
    let dp = yp
        .plus(&t.times(&ypp))
        .minus(&two.times(&e2).times(&triple.a).times(y).times(yp))
        .plus(&e1.times(y))
        .plus(&lin.times(yp));
    let n = two.times(&e1).times(t).times(y);
    let np = two.times(&e1).times(&y.plus(&t.times(yp)));
    let y_new = y.one_like().minus(&n.over(&d));
    let yp_new = np.times(&d).minus(&n.times(&dp)).over(&d.times(&d)).negated();
    Ok(Jet { t: t.clone(), y: y_new, yp: yp_new, triple: triple.bt(signs) })
}

/// y_± by the explicit formulas: y_+ = 1 + 2ty/(ty′ − ay² + (a−b−t)y + b),
/// y_− = 1 − 2ty/(ty′ + ay² − (a+b−t)y + b).
pub fn r_plus_minus<S: Field>(y: &S, yp: &S, t: &S, tr: &RootTriple<S>) -> Result<(S, S)> {
    let two_ty = y.int_like(2).times(t).times(y);
    let y2 = y.times(y);
    let dp = t
        .times(yp)
        .minus(&tr.a.times(&y2))
        .plus(&tr.a.minus(&tr.b).minus(t).times(y))
        .plus(&tr.b);
    let dm = t
        .times(yp)
        .plus(&tr.a.times(&y2))
        .minus(&tr.a.plus(&tr.b).minus(t).times(y))
        .plus(&tr.b);
    if dp.is_zero() || dm.is_zero() {
        return Err(Error::PoleEncountered { k: 0, z: format!("t = {}", t.render()) });
    }
    let one = y.one_like();
    Ok((one.plus(&two_ty.over(&dp)), one.minus(&two_ty.over(&dm))))
}

/// 1/(y_+ − 1) + 1/(y_− − 1) + a(y − 1)/t + 1.
pub fn chain_identity_residual<S: Field>(y: &S, y_plus: &S, y_minus: &S, t: &S, a: &S) -> S {
    let one = y.one_like();
    y_plus
        .minus(&one)
        .recip()
        .plus(&y_minus.minus(&one).recip())
        .plus(&a.times(&y.minus(&one)).over(t))
        .plus(&one)
}

fn singular_v<S: Field>(v: &S, t: &S) -> Result<()> {
    if t.is_zero() {
        return Err(Error::SingularPoint("t = 0".into()));
    }
    if v.is_zero() || v.plus(&v.one_like()).is_zero() {
        return Err(Error::SingularPoint(format!("v = {}", v.render())));
    }
    Ok(())
}

/// Residuals of v_{n+1} ± v′/(2v(v+1)) + ((a_n ± b_n)v + a_n)/(2tv(v+1)) + ½ = 0.
pub fn dd_residuals<S: Field>(t: &S, v: &S, vp: &S, v_next: &S, v_prev: &S, tr: &RootTriple<S>) -> Result<(S, S)> {
    singular_v(v, t)?;
    let half = v.ratio_like(1, 2);
    let w = v.int_like(2).times(v).times(&v.plus(&v.one_like()));
    let d = vp.over(&w);
    let tw = t.times(&w);
    let r_plus = v_next.plus(&d).plus(&tr.a.plus(&tr.b).times(v).plus(&tr.a).over(&tw)).plus(&half);
    let r_minus = v_prev.minus(&d).plus(&tr.a.minus(&tr.b).times(v).plus(&tr.a).over(&tw)).plus(&half);
    Ok((r_plus, r_minus))
}

/// v_{n+1} + v_{n−1} + 1 + a_n/(t v_n).
pub fn dpigen_residual<S: Field>(t: &S, v: &S, v_next: &S, v_prev: &S, a: &S) -> Result<S> {
    singular_v(v, t)?;
    Ok(v_next.plus(v_prev).plus(&v.one_like()).plus(&a.over(&t.times(v))))
}

/// v″ − [½(1/v + 1/(v+1))v′² − v′/t − (a²(v+1)² − b²v²)/(2v(v+1)t²) − cv(v+1)/t + v(v+1)(2v+1)/2].
pub fn vn_ode_residual<S: Field>(t: &S, v: &S, vp: &S, vpp: &S, tr: &RootTriple<S>) -> Result<S> {
    singular_v(v, t)?;
    let one = v.one_like();
    let two = v.int_like(2);
    let v1 = v.plus(&one);
    let vv1 = v.times(&v1);
    let mut r = v.recip().plus(&v1.recip()).times(&vp.times(vp)).over(&two);
    r = r.minus(&vp.over(t));
    let num = tr.a.times(&tr.a).times(&v1.times(&v1)).minus(&tr.b.times(&tr.b).times(&v.times(v)));
    r = r.minus(&num.over(&two.times(&vv1).times(&t.times(t))));
    r = r.minus(&tr.c.times(&vv1).over(t));
    r = r.plus(&vv1.times(&two.times(v).plus(&one)).over(&two));
    Ok(vpp.minus(&r))
}

/// t v′ − (t v² + (t − ⅔)v − ⅓) for n = 0, t v′ − (t v² + (t − ⅓)v − ⅔) for n = 1.
pub fn riccati_chain_residual<S: Field>(n: u8, t: &S, v: &S, vp: &S) -> Result<S> {
    let (lin, c) = match n {
        0 => (t.ratio_like(2, 3), t.ratio_like(1, 3)),
        1 => (t.ratio_like(1, 3), t.ratio_like(2, 3)),
        _ => return Err(Error::Domain(format!("Riccati chain only for n in {{0, 1}}, got {n}"))),
    };
    let rhs = t.times(&v.times(v)).plus(&t.minus(&lin).times(v)).minus(&c);
    Ok(t.times(vp).minus(&rhs))
}

/// 3ε² v₂′ + v₂² + (1 − 2ε + 2v₀)v₂ − 3ε, derivative in ε.
pub fn riccati_v2_residual<S: Field>(eps: &S, v2: &S, v2_prime: &S, v0: &S) -> S {
    let three = eps.int_like(3);
    let two = eps.int_like(2);
    let lin = eps.one_like().minus(&two.times(eps)).plus(&two.times(v0));
    three
        .times(&eps.times(eps))
        .times(v2_prime)
        .plus(&v2.times(v2))
        .plus(&lin.times(v2))
        .minus(&three.times(eps))
}

/// Hamiltonian state (q, p) at t with root variables a0..a3.
#[derive(Debug, Clone, PartialEq)]
pub struct HamState<S> {
    pub q: S,
    pub p: S,
    pub t: S,
    pub a: [S; 4],
}

impl<S: Field> HamState<S> {
    /// Checks a0 + a1 + a2 + a3 = 1 (exactly for exact scalars, to 1e-12 otherwise).
    pub fn new(q: S, p: S, t: S, a: [S; 4]) -> Result<Self> {
        let sum = a[0].plus(&a[1]).plus(&a[2]).plus(&a[3]);
        let off = sum.minus(&sum.one_like());
        let ok = if S::is_exact() { off.is_zero() } else { off.to_f64().abs() < 1e-12 };
        if !ok {
            return Err(Error::Domain(format!("root variables sum to {}, not 1", sum.render())));
        }
        Ok(HamState { q, p, t, a })
    }

    /// PV parameters of w = 1 − 1/q: (a1²/2, −a3²/2, a0 − a2, −½).
    pub fn pv_params(&self) -> PvParams<S> {
        let two = self.q.int_like(2);
        PvParams {
            alpha: self.a[1].times(&self.a[1]).over(&two),
            beta: self.a[3].times(&self.a[3]).over(&two).negated(),
            gamma: self.a[0].minus(&self.a[2]),
            delta: self.q.ratio_like(-1, 2),
        }
    }
}

/// (dq/dt, dp/dt).
pub fn ham_rhs<S: Field>(s: &HamState<S>) -> Result<(S, S)> {
    if s.t.is_zero() {
        return Err(Error::SingularPoint("t = 0".into()));
    }
    let (q, p, t) = (&s.q, &s.p, &s.t);
    let one = q.one_like();
    let two = q.int_like(2);
    let a13 = s.a[1].plus(&s.a[3]);
    let dq = q
        .times(&q.minus(&one))
        .times(&two.times(p).plus(t))
        .minus(&s.a[1].times(&q.minus(&one)))
        .minus(&s.a[3].times(q))
        .over(t);
    let dp = p
        .times(&p.plus(t))
        .times(&one.minus(&two.times(q)))
        .plus(&a13.times(p))
        .minus(&s.a[2].times(t))
        .over(t);
    Ok((dq, dp))
}

/// H = (q(q−1)p(p+t) − (a1+a3)qp + a1p + a2tq)/t.
pub fn ham_value<S: Field>(s: &HamState<S>) -> Result<S> {
    if s.t.is_zero() {
        return Err(Error::SingularPoint("t = 0".into()));
    }
    let (q, p, t) = (&s.q, &s.p, &s.t);
    let one = q.one_like();
    let a13 = s.a[1].plus(&s.a[3]);
    Ok(q.times(&q.minus(&one))
        .times(p)
        .times(&p.plus(t))
        .minus(&a13.times(q).times(p))
        .plus(&s.a[1].times(p))
        .plus(&s.a[2].times(t).times(q))
        .over(t))
}

/// Integrator settings; `tol` is used as both relative and absolute tolerance.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub max_steps: usize,
    /// Proximity threshold for the singularity guard.
    pub singular_eps: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { tol: 1e-10, max_steps: 1_000_000, singular_eps: 1e-8 }
    }
}

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

/// Accepted points plus a continuous extension between them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    steps: Vec<DenseStep>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }
    pub fn y_end(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    /// Dense-output value at t inside the integrated interval.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let (lo, hi) = (self.ts[0].min(self.t_end()), self.ts[0].max(self.t_end()));
        if t < lo - 1e-15 * lo.abs().max(1.0) || t > hi + 1e-15 * hi.abs().max(1.0) {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.ys[0].clone());
        }
        let idx = self
            .steps
            .iter()
            .position(|s| {
                let (a, b) = (s.t0.min(s.t0 + s.h), s.t0.max(s.t0 + s.h));
                t >= a && t <= b
            })
            .unwrap_or(self.steps.len() - 1);
        let s = &self.steps[idx];
        let th = (t - s.t0) / s.h;
        let th1 = 1.0 - th;
        Some(
            (0..s.r[0].len())
                .map(|i| s.r[0][i] + th * (s.r[1][i] + th1 * (s.r[2][i] + th * (s.r[3][i] + th1 * s.r[4][i]))))
                .collect(),
        )
    }

    /// CSV with a versioned header and the given column names.
    pub fn to_csv(&self, columns: &[&str]) -> String {
        let mut s = format!("# dpainleve trajectory v1\nt,{}\n", columns.join(","));
        for (t, y) in self.ts.iter().zip(&self.ys) {
            let row: Vec<String> = y.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&format!("{t:e},{}\n", row.join(",")));
        }
        s
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Dormand–Prince 5(4) from t0 to t1 (either direction).
///
/// `singular(t, y)` is checked at every accepted point; when it fires the
/// integration stops with `SingularityDetected`.
pub fn integrate<F, G>(f: F, t0: f64, y0: &[f64], t1: f64, opts: &IntegratorOptions, singular: G) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
    G: Fn(f64, &[f64]) -> bool,
{
    let mut traj = Trajectory { ts: vec![t0], ys: vec![y0.to_vec()], steps: Vec::new() };
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(traj);
    }
    if singular(t0, y0) {
        return Err(Error::SingularityDetected { t: t0 });
    }
    let dir = span.signum();
    let n = y0.len();
    let tol = opts.tol;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = f(t, &y)?;
    let mut h = initial_step(&k1, &y, span.abs(), tol) * dir;
    let mut steps = 0;
    loop {
        if steps >= opts.max_steps {
            return Err(Error::NoConvergence { steps, achieved: t });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let mut k: Vec<Vec<f64>> = vec![k1.clone()];
        let mut ok = true;
        for s in 1..7 {
            let ys: Vec<f64> = (0..n).map(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>()).collect();
            match f(t + C[s] * h, &ys) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => k.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            h *= 0.25;
            steps += 1;
            continue;
        }
        let y_new: Vec<f64> = (0..n).map(|i| y[i] + h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|i| {
                let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = tol + tol * y[i].abs().max(y_new[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let err = err.sqrt();
        steps += 1;
        if err <= 1.0 {
            let ydiff: Vec<f64> = (0..n).map(|i| y_new[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k[0][i] - ydiff[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| ydiff[i] - h * k[6][i] - bspl[i]).collect();
            let r5: Vec<f64> = (0..n).map(|i| h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect();
            traj.steps.push(DenseStep { t0: t, h, r: [y.clone(), ydiff, bspl, r4, r5] });
            t += h;
            if (t - t1) * dir >= 0.0 || (t1 - t).abs() < 1e-15 * t1.abs().max(1.0) {
                t = t1;
            }
            y = y_new;
            k1 = k[6].clone();
            traj.ts.push(t);
            traj.ys.push(y.clone());
            if singular(t, &y) {
                return Err(Error::SingularityDetected { t });
            }
            if t == t1 {
                return Ok(traj);
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
}

fn initial_step(f0: &[f64], y0: &[f64], span: f64, tol: f64) -> f64 {
    let n = y0.len() as f64;
    let d0 = (y0.iter().map(|y| (y / (tol + tol * y.abs())).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(y0).map(|(f, y)| (f / (tol + tol * y.abs())).powi(2)).sum::<f64>() / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span)
}

/// Integrate PV for (y, y′) from t0 to t1; stops at y within `singular_eps` of 0 or 1.
pub fn integrate_pv(y0: f64, yp0: f64, t0: f64, t1: f64, triple: &RootTriple<f64>, opts: &IntegratorOptions) -> Result<Trajectory> {
    let p = triple.pv_params();
    let eps = opts.singular_eps;
    integrate(
        |t, s| Ok(vec![s[1], pv_rhs(&s[0], &s[1], &t, &p)?]),
        t0,
        &[y0, yp0],
        t1,
        opts,
        |t, s| s[0].abs() < eps || (s[0] - 1.0).abs() < eps || t.abs() < eps,
    )
}

/// Integrate the Hamiltonian system for (q, p).
pub fn integrate_ham(state: &HamState<f64>, t1: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    let a = state.a;
    let eps = opts.singular_eps;
    integrate(
        |t, s| {
            let (dq, dp) = ham_rhs(&HamState { q: s[0], p: s[1], t, a })?;
            Ok(vec![dq, dp])
        },
        state.t,
        &[state.q, state.p],
        t1,
        opts,
        |t, _| t.abs() < eps,
    )
}

/// Integrate 3ε² v′ = ε(1 + 2v) − v − v² in ε.
pub fn integrate_eps_riccati(eps0: f64, v0: f64, eps1: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    let eps = opts.singular_eps;
    integrate(
        |e, s| {
            if e == 0.0 {
                return Err(Error::SingularPoint("eps = 0".into()));
            }
            let v = s[0];
            Ok(vec![(e * (1.0 + 2.0 * v) - v - v * v) / (3.0 * e * e)])
        },
        eps0,
        &[v0],
        eps1,
        opts,
        |e, _| e.abs() < eps,
    )
}

/// Integrate t y′ = y²/3 − t y − ⅓ for the seed y_0.
pub fn integrate_y0_riccati(t0: f64, y0: f64, t1: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    let eps = opts.singular_eps;
    integrate(
        |t, s| {
            if t == 0.0 {
                return Err(Error::SingularPoint("t = 0".into()));
            }
            let y = s[0];
            Ok(vec![(y * y / 3.0 - t * y - 1.0 / 3.0) / t])
        },
        t0,
        &[y0],
        t1,
        opts,
        |t, _| t.abs() < eps,
    )
}

/// One row of a dd/dPIgen chain report.
#[derive(Debug, Clone, Serialize)]
pub struct ChainRow {
    pub n: i64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub dpigen: f64,
    pub pv: f64,
}

/// dd_residuals, dPIgen and the PV residual of y_n = 1 + 1/v_n along the
/// closed-form chain at t, for n = 0..=n_max.
pub fn chain_check(t: &rug::Float, n_max: i64, digits: u32) -> Result<Vec<ChainRow>> {
    use crate::special_fn::BesselCoeffs;
    use crate::wronskian::v_closed_jet;
    let coeffs = BesselCoeffs::positive();
    let mut jets = Vec::new();
    for n in -1..=n_max + 1 {
        jets.push(v_closed_jet(n, t, &coeffs, digits)?);
    }
    let tt = rug::Float::with_val(jets[0][0].prec(), t);
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let i = (n + 1) as usize;
        let [v, vp, vpp] = &jets[i];
        let tr = params_n(n, v);
        let (rp, rm) = dd_residuals(&tt, v, vp, &jets[i + 1][0], &jets[i - 1][0], &tr)?;
        let g = dpigen_residual(&tt, v, &jets[i + 1][0], &jets[i - 1][0], &tr.a)?;
        let y = v.recip().plus(&v.one_like());
        let v2 = v.times(v);
        let yp = vp.over(&v2).negated();
        let ypp = v.int_like(2).times(&vp.times(vp)).over(&v2.times(v)).minus(&vpp.over(&v2));
        let pv = pv_residual(&y, &yp, &ypp, &tt, &tr.pv_params())?;
        rows.push(ChainRow {
            n,
            r_plus: Real::abs(&rp).to_f64(),
            r_minus: Real::abs(&rm).to_f64(),
            dpigen: Real::abs(&g).to_f64(),
            pv: Real::abs(&pv).to_f64(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::{v0_closed, y0_jet, BesselCoeffs};
    use crate::wronskian::{bessel_pv_params, v_closed, v_closed_jet, y_bessel_jet};
    use proptest::prelude::*;
    use rug::{Float, Rational};

    fn r(p: i64, q: i64) -> Rational {
        Rational::from((p, q))
    }

    fn fl(x: f64) -> Float {
        Float::with_val(256, x)
    }

    #[test]
    fn r_on_chain_triple() {
        let t = params_n(0, &r(0, 1));
        assert_eq!(t.r_forward(), RootTriple::new(r(-2, 3), r(1, 3), r(-2, 3)));
        for n in -5..10 {
            assert_eq!(params_n(n, &r(0, 1)).r_forward(), params_n(n + 1, &r(0, 1)));
            assert_eq!(params_n(n, &r(0, 1)).r_inverse(), params_n(n - 1, &r(0, 1)));
        }
    }

    #[test]
    fn explicit_parameter_maps() {
        let (a, b, c) = (r(2, 7), r(-3, 5), r(1, 9));
        let tr = RootTriple::new(a.clone(), b.clone(), c.clone());
        let plus = RootTriple::new(
            (a.clone() + &b + &c - 1u32) / 2u32,
            -(a.clone() + &b - &c - 1u32) / 2u32,
            a.clone() - &b,
        );
        assert_eq!(tr.r_forward(), plus);
        let minus = RootTriple::new(
            (a.clone() - &b + &c + 1u32) / 2u32,
            (a.clone() - &b - &c + 1u32) / 2u32,
            a.clone() + &b,
        );
        assert_eq!(tr.r_inverse(), minus);
        // T_{1,−1,1} alone sends (a, b, c) to ((a−b+c+1)/2, (−a+b+c−1)/2, a+b).
        let t = tr.bt(Signs::new(1, -1, 1));
        assert_eq!(t, RootTriple::new((a.clone() - &b + &c + 1u32) / 2u32, (-a.clone() + &b + &c - 1u32) / 2u32, a + b));
    }

    #[test]
    fn evolution_special_case() {
        let z = fl(0.0);
        for n in 0..12 {
            let p = param_evolution(n, &z, &z, &Float::with_val(256, Rational::from((-1, 3))));
            let want = params_n(n, &fl(0.0));
            assert!((p.a - want.a).abs() < 1e-70);
            assert!((p.b - want.b).abs() < 1e-70);
            assert!((p.c - want.c).abs() < 1e-70);
        }
        for n in 0..10 {
            let p = params_n(3 * n, &r(0, 1));
            assert_eq!(p.a - p.b + p.c, -2 * n - 1);
        }
    }

    proptest! {
        #[test]
        fn evolution_recurrences(mu in -3.0f64..3.0, ka in -3.0f64..3.0, la in -3.0f64..3.0) {
            for n in 0..30 {
                let p = |k| param_evolution(k, &mu, &ka, &la);
                let (p0, p1, p2, p3) = (p(n), p(n + 1), p(n + 2), p(n + 3));
                prop_assert!((p3.a - p0.a + 1.0).abs() < 1e-12);
                prop_assert!((p0.b - (p1.a - p2.a)).abs() < 1e-12);
                prop_assert!((p0.c - (p1.a + p1.b)).abs() < 1e-12);
                let f = p0.r_forward();
                prop_assert!((f.a - p1.a).abs() < 1e-12 && (f.b - p1.b).abs() < 1e-12 && (f.c - p1.c).abs() < 1e-12);
            }
        }

        #[test]
        fn hamiltonian_partials(q in -2.0f64..2.0, p in -2.0f64..2.0, t in 0.3f64..4.0, a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, a3 in -1.0f64..1.0) {
            let a = [1.0 - a1 - a2 - a3, a1, a2, a3];
            let s = HamState::new(q, p, t, a).unwrap();
            let (dq, dp) = ham_rhs(&s).unwrap();
            let h = 1e-5;
            let hv = |q: f64, p: f64| ham_value(&HamState { q, p, t, a }).unwrap();
            let dh_dp = (hv(q, p + h) - hv(q, p - h)) / (2.0 * h);
            let dh_dq = (hv(q + h, p) - hv(q - h, p)) / (2.0 * h);
            prop_assert!((dq - dh_dp).abs() < 1e-8 * (1.0 + dq.abs()));
            prop_assert!((dp + dh_dq).abs() < 1e-8 * (1.0 + dp.abs()));
        }
    }

    #[test]
    fn hamiltonian_partials_high_precision() {
        let a = [fl(0.2), fl(0.3), fl(0.1), fl(0.4)];
        let (q, p, t) = (fl(0.3), fl(0.7), fl(1.3));
        let s = HamState::new(q.clone(), p.clone(), t.clone(), a.clone()).unwrap();
        let (dq, dp) = ham_rhs(&s).unwrap();
        let h = fl(1e-20);
        let hv = |q: Float, p: Float| ham_value(&HamState { q, p, t: t.clone(), a: a.clone() }).unwrap();
        let dh_dp = (hv(q.clone(), p.clone() + &h) - hv(q.clone(), p.clone() - &h)) / (h.clone() * 2u32);
        let dh_dq = (hv(q.clone() + &h, p.clone()) - hv(q - &h, p)) / (h * 2u32);
        assert!((dq - dh_dp).abs() < 1e-30);
        assert!((dp + dh_dq).abs() < 1e-30);
        assert!(HamState::new(fl(0.0), fl(0.0), fl(1.0), [fl(0.5), fl(0.5), fl(0.5), fl(0.0)]).is_err());
    }

    #[test]
    fn hamiltonian_trajectory_gives_pv() {
        let a = [0.2, 0.3, 0.1, 0.4];
        let s = HamState::new(0.3, 0.7, 1.0, a).unwrap();
        let opts = IntegratorOptions { tol: 1e-12, ..Default::default() };
        let tr = integrate_ham(&s, 1.6, &opts).unwrap();
        let params = s.pv_params();
        for tt in [1.2, 1.3, 1.45] {
            let st = tr.eval(tt).unwrap();
            let st_state = HamState { q: st[0], p: st[1], t: tt, a };
            let (dq, dp) = ham_rhs(&st_state).unwrap();
            // w = 1 − 1/q: w′ = q′/q², w″ = q″/q² − 2q′²/q³, with q″ from a difference of q′.
            let h = 1e-4;
            let qd = |x: f64| {
                let s = tr.eval(x).unwrap();
                ham_rhs(&HamState { q: s[0], p: s[1], t: x, a }).unwrap().0
            };
            let qpp = (qd(tt + h) - qd(tt - h)) / (2.0 * h);
            let q = st[0];
            let w = 1.0 - 1.0 / q;
            let wp = dq / (q * q);
            let wpp = qpp / (q * q) - 2.0 * dq * dq / (q * q * q);
            let res = pv_residual(&w, &wp, &wpp, &tt, &params).unwrap();
            assert!(res.abs() < 1e-6, "t={tt}: {res}");
            let _ = dp;
        }
    }

    #[test]
    fn pv_residual_seed_and_chain() {
        let d = 50;
        let t = fl(2.0);
        let (c1, c2) = (r(0, 1), r(1, 1));
        let (y, yp) = y0_jet(&t, &c1, &c2, d).unwrap();
        let params = params_n(0, &t).pv_params();
        let ypp = pv_rhs(&y, &yp, &t, &params).unwrap();
        // Second derivative from the Riccati equation ty′ = y²/3 − ty − ⅓ differentiated once.
        let ypp_ric = (Float::with_val(256, &y * &yp) * 2u32 / 3u32 - &y - Float::with_val(256, &t * &yp) - &yp) / &t;
        assert!((ypp - ypp_ric).abs() < 1e-40);
        let rows = chain_check(&t, 6, 40).unwrap();
        for row in rows {
            assert!(row.pv < 1e-30 && row.r_plus < 1e-30 && row.r_minus < 1e-30 && row.dpigen < 1e-30, "{row:?}");
        }
    }

    #[test]
    fn constant_is_not_a_solution() {
        let p = PvParams { alpha: 0.5, beta: -0.5, gamma: 0.25, delta: -0.5 };
        let (y, t) = (2.0, 1.5);
        let r = pv_residual(&y, &0.0, &0.0, &t, &p).unwrap();
        let expect = -((y - 1.0) * (y - 1.0) * (p.alpha * y * y + p.beta) / (t * t * y) + p.gamma * y / t - y * (y + 1.0) / (2.0 * (y - 1.0)));
        assert!((r - expect).abs() < 1e-14);
        assert!(matches!(pv_residual(&1.0, &0.0, &0.0, &t, &p), Err(Error::SingularPoint(_))));
        assert!(matches!(pv_residual(&0.5, &0.0, &0.0, &0.0, &p), Err(Error::SingularPoint(_))));
    }

    fn seed_jet(n: i64, t: &Float) -> Jet<Float> {
        let [v, vp, _] = v_closed_jet(n, t, &BesselCoeffs::positive(), 45).unwrap();
        let y = v.clone().recip() + 1u32;
        let yp = -(vp / Float::with_val(256, v.square_ref()));
        Jet { t: t.clone(), y, yp, triple: params_n(n, t) }
    }

    #[test]
    fn bt_compositions() {
        let t = fl(1.7);
        for n in 0..5 {
            let j = seed_jet(n, &t);
            let next = seed_jet(n + 1, &t);
            let jr = bt_apply_jet(&j, Signs::R).unwrap();
            assert!((jr.y.clone() - &next.y).abs() < 1e-35, "R(y_{n})");
            assert!((jr.yp.clone() - &next.yp).abs() < 1e-33);
            assert_eq!(jr.triple.a.to_f64(), next.triple.a.to_f64());
            // T_{1,−1,1} ∘ R returns y with (a, −b, c).
            let back = bt_apply_jet(&jr, Signs::new(1, -1, 1)).unwrap();
            assert!((back.y.clone() - &j.y).abs() < 1e-33);
            assert!((back.triple.b.clone() + &j.triple.b).abs() < 1e-60);
            // R ∘ T_{1,−1,1} does not return y.
            let other = bt_apply_jet(&bt_apply_jet(&j, Signs::new(1, -1, 1)).unwrap(), Signs::R).unwrap();
            assert!((other.y - &j.y).abs() > 1e-3);
            if n == 1 {
                // The middle factor vanishes identically on the Riccati seed y_0.
                let a = bt_apply_jet(&j, Signs::new(1, -1, 1)).unwrap();
                let b = bt_apply_jet(&a, Signs::new(1, -1, -1)).unwrap();
                assert!(b.y.abs().to_f64() > 1e30);
            }
            if n >= 2 {
                let prev = seed_jet(n - 1, &t);
                let a = bt_apply_jet(&j, Signs::new(1, -1, 1)).unwrap();
                let b = bt_apply_jet(&a, Signs::new(1, -1, -1)).unwrap();
                let c = bt_apply_jet(&b, Signs::new(-1, 1, -1)).unwrap();
                assert!((c.y.clone() - &prev.y).abs() < 1e-30, "R^-1(y_{n})");
                assert!((c.triple.a.clone() - &prev.triple.a).abs() < 1e-60);
                let rc = bt_apply_jet(&c, Signs::R).unwrap();
                assert!((rc.y - &j.y).abs() < 1e-28);
            }
            let (yp_, ym_) = r_plus_minus(&j.y, &j.yp, &t, &j.triple).unwrap();
            assert!((yp_.clone() - &next.y).abs() < 1e-35);
            let res = chain_identity_residual(&j.y, &yp_, &ym_, &t, &j.triple.a);
            assert!(res.abs() < 1e-33);
        }
    }

    #[test]
    fn bt_pole() {
        let tr = RootTriple::new(0.0, 0.0, 0.0);
        assert!(matches!(bt_apply(&1.0, &1.0, &1.0, &tr, Signs::new(-1, 1, 1)), Err(Error::PoleEncountered { .. })));
        let (y, p) = bt_apply(&2.0, &0.5, &1.0, &RootTriple::new(-1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0), Signs::R).unwrap();
        assert!(y.is_finite());
        assert!((p.a + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn v_ode_corrected_form() {
        let t = fl(2.0);
        for n in 0..6 {
            let [v, vp, vpp] = v_closed_jet(n, &t, &BesselCoeffs::positive(), 45).unwrap();
            let tr = params_n(n, &t);
            let res = vn_ode_residual(&t, &v, &vp, &vpp, &tr).unwrap();
            assert!(res.abs() < 1e-30, "n={n}");
        }
    }

    #[test]
    fn riccati_pair_and_change_of_variables() {
        let t = fl(3.0);
        for n in 0..2u8 {
            let [v, vp, _] = v_closed_jet(n as i64, &t, &BesselCoeffs::positive(), 45).unwrap();
            let res = riccati_chain_residual(n, &t, &v, &vp).unwrap();
            assert!(res.abs() < 1e-35, "n={n}");
        }
        // residual_t(v, v′) = −t · residual_ε(v, −v′/(3ε²)), ε = 1/(3t), on arbitrary values.
        for (tv, v, vp) in [(3.0, 0.2, -0.7), (0.4, 1.3, 2.2)] {
            let (t, v, vp) = (fl(tv), fl(v), fl(vp));
            let eps = Float::with_val(256, Float::with_val(256, &t * 3u32).recip_ref());
            let dv_de = -Float::with_val(256, &vp / Float::with_val(256, eps.square_ref())) / 3u32;
            let re = crate::cfrac::riccati_residual_eta(0, &eps, &v, &dv_de);
            let rt = riccati_chain_residual(0, &t, &v, &vp).unwrap();
            assert!((rt + Float::with_val(256, &t * re)).abs() < 1e-60);
        }
        assert!(riccati_chain_residual(2, &t, &t, &t).is_err());
    }

    #[test]
    fn v2_riccati() {
        let d = 50;
        let eps = fl(0.2);
        let t = Float::with_val(256, Float::with_val(256, &eps * 3u32).recip_ref());
        let c = BesselCoeffs::positive();
        let [v2, v2t, _] = v_closed_jet(2, &t, &c, d).unwrap();
        let v0 = v_closed(0, &t, &c, d).unwrap();
        let de = -Float::with_val(256, &v2t / Float::with_val(256, eps.square_ref())) / 3u32;
        assert!(riccati_v2_residual(&eps, &v2, &de, &v0).abs() < 1e-30);
    }

    #[test]
    fn bessel_families_solve_pv() {
        let c = BesselCoeffs::new(r(13, 10), r(-2, 5)).unwrap();
        let t = fl(1.9);
        for (kind, m, n, nu) in [(1u8, 1i64, 0i64, r(-1, 6)), (1, 0, 1, r(1, 6)), (1, 3, 1, r(-1, 6)), (1, 2, 1, r(1, 3)), (2, -1, 1, r(-1, 6)), (2, 2, 1, r(1, 3)), (2, 0, 2, r(1, 6))] {
            let [y, yp, ypp] = y_bessel_jet(kind, m, n, &nu, &t, &c, 40).unwrap();
            let [al, be, ga] = bessel_pv_params(kind, m, n, &nu);
            let p = PvParams {
                alpha: Float::with_val(256, &al),
                beta: Float::with_val(256, &be),
                gamma: Float::with_val(256, &ga),
                delta: fl(-0.5),
            };
            let res = pv_residual(&y, &yp, &ypp, &t, &p).unwrap();
            let scale = Float::with_val(256, ypp.abs_ref()).to_f64().max(1.0);
            assert!(res.abs().to_f64() / scale < 1e-30, "y[{kind}]_{{{m},{n},{nu}}}");
        }
    }

    #[test]
    fn integrator_eps_riccati_matches_closed_form() {
        let d = 30;
        let v_start = v0_closed(&fl(0.01), d).unwrap().to_f64();
        let opts = IntegratorOptions { tol: 1e-10, ..Default::default() };
        let tr = integrate_eps_riccati(0.01, v_start, 1.0, &opts).unwrap();
        for e in [0.05, 0.3, 1.0] {
            let v = tr.eval(e).unwrap()[0];
            let want = v0_closed(&fl(e), d).unwrap().to_f64();
            assert!((v - want).abs() < 1e-8, "eps={e}: {v} vs {want}");
        }
    }

    #[test]
    fn integrator_y0_riccati_backward() {
        let (c1, c2) = (r(0, 1), r(1, 1));
        let y5 = y0_jet(&fl(5.0), &c1, &c2, 30).unwrap().0.to_f64();
        let opts = IntegratorOptions { tol: 1e-10, ..Default::default() };
        let tr = integrate_y0_riccati(5.0, y5, 1.0, &opts).unwrap();
        let y1 = y0_jet(&fl(1.0), &c1, &c2, 30).unwrap().0.to_f64();
        assert!((tr.y_end()[0] - y1).abs() < 1e-8);
        let same = integrate_y0_riccati(2.0, 0.3, 2.0, &opts).unwrap();
        assert_eq!(same.ts, vec![2.0]);
        assert_eq!(same.y_end(), &[0.3]);
    }

    #[test]
    fn integrator_detects_singularity() {
        // y′ = −1 from y = 0.5 reaches y = 0 at t = 0.5 + t0.
        let opts = IntegratorOptions::default();
        let tr = RootTriple::new(0.0, 0.0, 0.0);
        let res = integrate_pv(0.5, -1.0, 1.0, 3.0, &tr, &opts);
        assert!(matches!(res, Err(Error::SingularityDetected { .. })), "{res:?}");
    }

    #[test]
    fn pv_trajectory_and_csv() {
        let t0 = 2.0;
        let j = seed_jet(1, &fl(t0));
        let tr = params_n(1, &0.0f64);
        let opts = IntegratorOptions { tol: 1e-11, ..Default::default() };
        let traj = integrate_pv(j.y.to_f64(), j.yp.to_f64(), t0, 3.0, &tr, &opts).unwrap();
        let want = seed_jet(1, &fl(3.0)).y.to_f64();
        assert!((traj.y_end()[0] - want).abs() < 1e-7);
        let csv = traj.to_csv(&["y", "yp"]);
        assert!(csv.starts_with("# dpainleve trajectory v1\nt,y,yp\n"));
        assert_eq!(csv.lines().count(), traj.ts.len() + 2);
    }
}
