//! Picard lattice of the eight-point blowup of P¹×P¹ for the dP_I map:
//! the push-forward/pull-back, intersection form, root bases, the
//! quasi-translation property and the root variables.
//!
//! Classes are integer vectors over (H_x, H_y, E_1, …, E_8). The standard
//! surface is drawn in (q, p) coordinates; its roots are stored here after the
//! relabeling H_q → H_x, H_p → H_y.

use crate::error::{Error, Result};
use rug::Rational;
use serde::Serialize;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub const RANK: usize = 10;
pub const BASIS_NAMES: [&str; RANK] = ["H_x", "H_y", "E_1", "E_2", "E_3", "E_4", "E_5", "E_6", "E_7", "E_8"];

/// Chart relabeling from the standard surface's basis to the map's basis.
pub const RELABEL: [(&str, &str); 2] = [("H_q", "H_x"), ("H_p", "H_y")];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PicardClass(pub [i64; RANK]);

impl PicardClass {
    pub const ZERO: PicardClass = PicardClass([0; RANK]);

    pub fn basis(i: usize) -> Self {
        let mut c = [0; RANK];
        c[i] = 1;
        PicardClass(c)
    }
    pub fn hx() -> Self {
        Self::basis(0)
    }
    pub fn hy() -> Self {
        Self::basis(1)
    }
    /// E_i for i = 1..=8.
    pub fn e(i: usize) -> Self {
        assert!((1..=8).contains(&i), "exceptional index {i} out of range");
        Self::basis(i + 1)
    }
    /// −K = 2H_x + 2H_y − ΣE_i.
    pub fn anticanonical() -> Self {
        let mut c = [-1; RANK];
        c[0] = 2;
        c[1] = 2;
        PicardClass(c)
    }
    pub fn coeffs(&self) -> &[i64; RANK] {
        &self.0
    }
}

impl Add for PicardClass {
    type Output = PicardClass;
    fn add(self, o: Self) -> Self {
        PicardClass(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for PicardClass {
    type Output = PicardClass;
    fn sub(self, o: Self) -> Self {
        PicardClass(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for PicardClass {
    type Output = PicardClass;
    fn neg(self) -> Self {
        PicardClass(self.0.map(|x| -x))
    }
}

impl Mul<PicardClass> for i64 {
    type Output = PicardClass;
    fn mul(self, c: PicardClass) -> PicardClass {
        PicardClass(c.0.map(|x| self * x))
    }
}

impl fmt::Display for PicardClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, name) in self.0.iter().zip(BASIS_NAMES) {
            if *c == 0 {
                continue;
            }
            let sign = if *c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let sep = if first { "" } else { " " };
            if mag == 1 {
                write!(f, "{sep}{sign}{}{name}", if first || sign.is_empty() { "" } else { " " })?;
            } else {
                write!(f, "{sep}{sign}{}{mag}{name}", if first || sign.is_empty() { "" } else { " " })?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// H_x·H_y = 1, H_x² = H_y² = 0, E_i·E_j = −δ_ij, H·E = 0.
pub fn intersection(a: &PicardClass, b: &PicardClass) -> i64 {
    let (x, y) = (a.0, b.0);
    x[0] * y[1] + x[1] * y[0] - (2..RANK).map(|i| x[i] * y[i]).sum::<i64>()
}

/// Images of the basis under φ_*.
fn push_table() -> [PicardClass; RANK] {
    let (hx, hy, e) = (PicardClass::hx(), PicardClass::hy(), PicardClass::e);
    [
        hx + hy - e(5) - e(6),
        hx,
        e(7),
        e(8),
        hx - e(6),
        hx - e(5),
        e(1),
        e(2),
        e(3),
        e(4),
    ]
}

/// Images of the basis under φ^* = (φ_*)^{-1}.
fn pull_table() -> [PicardClass; RANK] {
    let (hx, hy, e) = (PicardClass::hx(), PicardClass::hy(), PicardClass::e);
    [
        hy,
        hx + hy - e(3) - e(4),
        e(5),
        e(6),
        e(7),
        e(8),
        hy - e(4),
        hy - e(3),
        e(1),
        e(2),
    ]
}

fn apply(table: &[PicardClass; RANK], c: &PicardClass) -> PicardClass {
    (0..RANK).fold(PicardClass::ZERO, |acc, i| acc + c.0[i] * table[i])
}

pub fn phi_push(c: &PicardClass) -> PicardClass {
    apply(&push_table(), c)
}

pub fn phi_pull(c: &PicardClass) -> PicardClass {
    apply(&pull_table(), c)
}

/// φ_*^k (k ≥ 0) or φ^{*|k|} (k < 0).
pub fn phi_power(c: &PicardClass, k: i64) -> PicardClass {
    let mut out = *c;
    for _ in 0..k.unsigned_abs() {
        out = if k > 0 { phi_push(&out) } else { phi_pull(&out) };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootKind {
    Surface,
    Symmetry,
}

/// Surface roots δ_0..δ_5 (D_5^(1)) or symmetry roots α_0..α_3 (A_3^(1)).
pub fn roots(kind: RootKind) -> Vec<PicardClass> {
    let (hx, hy, e) = (PicardClass::hx(), PicardClass::hy(), PicardClass::e);
    match kind {
        RootKind::Surface => vec![
            e(1) - e(2),
            e(3) - e(4),
            hx - e(1) - e(3),
            hy - e(5) - e(7),
            e(5) - e(6),
            e(7) - e(8),
        ],
        RootKind::Symmetry => vec![hy - e(1) - e(2), hx - e(5) - e(6), hy - e(3) - e(4), hx - e(7) - e(8)],
    }
}

/// δ̂ = α_0 + α_1 + α_2 + α_3.
pub fn delta_hat() -> PicardClass {
    roots(RootKind::Symmetry).into_iter().fold(PicardClass::ZERO, |a, b| a + b)
}

/// Generalised Cartan matrix −(r_i · r_j).
pub fn cartan(roots: &[PicardClass]) -> Vec<Vec<i64>> {
    roots.iter().map(|a| roots.iter().map(|b| -intersection(a, b)).collect()).collect()
}

/// Affine A_3: the 4-cycle.
pub fn affine_a3_cartan() -> Vec<Vec<i64>> {
    (0..4)
        .map(|i| {
            (0..4)
                .map(|j| match (i as i64 - j as i64).rem_euclid(4) {
                    0 => 2,
                    1 | 3 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

/// Affine D_5: δ_2 joined to δ_0, δ_1, δ_3; δ_3 joined to δ_4, δ_5.
pub fn affine_d5_cartan() -> Vec<Vec<i64>> {
    let edges = [(0, 2), (1, 2), (2, 3), (3, 4), (3, 5)];
    let mut m = vec![vec![0; 6]; 6];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2;
    }
    for (a, b) in edges {
        m[a][b] = -1;
        m[b][a] = -1;
    }
    m
}

/// Coordinates of a class in the α basis, if it lies in their span.
///
/// The α_i use disjoint exceptional pairs, so the coordinate of α_i is read
/// off from the first exceptional class of α_i and then verified.
pub fn in_alpha_basis(c: &PicardClass) -> Option<[i64; 4]> {
    let lead = [2usize, 6, 4, 8];
    let coords: [i64; 4] = std::array::from_fn(|i| -c.0[lead[i]]);
    let alphas = roots(RootKind::Symmetry);
    let rebuilt = (0..4).fold(PicardClass::ZERO, |acc, i| acc + coords[i] * alphas[i]);
    (rebuilt == *c).then_some(coords)
}

/// φ_* on the symmetry roots: row i holds the α-coordinates of φ_*(α_i).
pub fn alpha_action() -> [[i64; 4]; 4] {
    let alphas = roots(RootKind::Symmetry);
    std::array::from_fn(|i| in_alpha_basis(&phi_push(&alphas[i])).expect("φ_* preserves the symmetry sub-lattice"))
}

/// Translation vector c with φ_*^power(α_i) = α_i + c_i δ̂ for every i, if any.
pub fn translation_check(power: u32) -> Option<[i64; 4]> {
    let dh = delta_hat();
    let alphas = roots(RootKind::Symmetry);
    let mut out = [0i64; 4];
    for (i, a) in alphas.iter().enumerate() {
        let d = phi_power(a, power as i64) - *a;
        let c = d.0[0] / dh.0[0];
        if c * dh != d {
            return None;
        }
        out[i] = c;
    }
    Some(out)
}

/// Translation of the KNY D_5 equation, ⟨−1, 1, −1, 1⟩δ̂.
pub const KNY_TRANSLATION: [i64; 4] = [-1, 1, -1, 1];
/// Translation of Sakai's D_5 equation, ⟨−1, 0, 0, 1⟩δ̂.
pub const SAKAI_TRANSLATION: [i64; 4] = [-1, 0, 0, 1];

/// Root variables a_0..a_3 with a_0 + a_1 + a_2 + a_3 = 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootVariables {
    #[serde(serialize_with = "ser_rationals")]
    pub a: [Rational; 4],
}

fn ser_rationals<S: serde::Serializer>(a: &[Rational; 4], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(4))?;
    for x in a {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

impl RootVariables {
    pub fn sum(&self) -> Rational {
        self.a.iter().fold(Rational::new(), |s, x| s + x)
    }
    /// (α, β, γ) = (a_1²/2, −a_3²/2, a_0 − a_2), δ = −½.
    pub fn pv_params(&self) -> [Rational; 3] {
        [
            Rational::from(self.a[1].square_ref()) / 2u32,
            -Rational::from(self.a[3].square_ref()) / 2u32,
            Rational::from(&self.a[0] - &self.a[2]),
        ]
    }
}

/// Coefficients (α̃, β̃, γ̃) of x_{n+1} + x_{n−1} = (α̃n + β̃)/x_n + γ̃, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpiCoefficients {
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
}

impl DpiCoefficients {
    /// (ε, ε, −1): dP_I itself.
    pub fn special(eps: &Rational) -> Self {
        DpiCoefficients { alpha: eps.clone(), beta: eps.clone(), gamma: Rational::from(-1) }
    }

    fn check(&self) -> Result<()> {
        if self.alpha == 0 || self.gamma == 0 {
            return Err(Error::DegenerateParams("need alpha~ != 0 and gamma~ != 0".into()));
        }
        Ok(())
    }
}

/// a_0 = ⅓, a_1 = −n/3 − β̃/(3α̃), a_2 = (n+1)/3 + β̃/(3α̃), a_3 = ⅓.
pub fn root_variables_dp(n: i64, p: &DpiCoefficients) -> Result<RootVariables> {
    p.check()?;
    let r = Rational::from(&p.beta / &p.alpha) / 3u32;
    let third = Rational::from((1, 3));
    Ok(RootVariables {
        a: [
            third.clone(),
            Rational::from((-n, 3)) - &r,
            Rational::from((n + 1, 3)) + &r,
            third,
        ],
    })
}

/// One base point: its chart coordinates and the point it is infinitely near to.
#[derive(Debug, Clone, Serialize)]
pub struct BasePoint {
    pub index: u8,
    pub parent: Option<u8>,
    pub coordinates: Vec<(String, String)>,
}

/// q_1..q_8 in four cascades q_1 ← q_2, q_3 ← q_4, q_5 ← q_6, q_7 ← q_8.
pub fn base_points(n: i64, p: &DpiCoefficients) -> Result<Vec<BasePoint>> {
    p.check()?;
    let (a, b, g) = (&p.alpha, &p.beta, &p.gamma);
    let s = |x: Rational| x.to_string();
    let bp = |index, parent, coords: Vec<(&str, Rational)>| BasePoint {
        index,
        parent,
        coordinates: coords.into_iter().map(|(k, v)| (k.to_string(), s(v))).collect(),
    };
    let zero = Rational::new();
    Ok(vec![
        bp(1, None, vec![("X=1/x", zero.clone()), ("y", g.clone())]),
        bp(2, Some(1), vec![("u1=1/x", zero.clone()), ("v1=x(y-gamma)", a.clone())]),
        bp(3, None, vec![("X=1/x", zero.clone()), ("y", zero.clone())]),
        bp(4, Some(3), vec![("u3=1/x", zero.clone()), ("v3=xy", Rational::from(a * (n + 1)) + b)]),
        bp(5, None, vec![("x", zero.clone()), ("Y=1/y", zero.clone())]),
        bp(6, Some(5), vec![("U5=xy", Rational::from(a * n) + b), ("V5=1/y", zero.clone())]),
        bp(7, None, vec![("x", g.clone()), ("Y=1/y", zero.clone())]),
        bp(8, Some(7), vec![("U7=y(x-gamma)", -a.clone()), ("V7=1/y", zero)]),
    ])
}

/// Outcome of the lattice checks.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub pull_inverts_push: bool,
    pub preserves_intersection: bool,
    pub fixes_anticanonical: bool,
    pub permutes_surface_roots: bool,
    pub symmetry_cartan_is_a3: bool,
    pub surface_cartan_is_d5: bool,
    pub alpha_action: [[i64; 4]; 4],
    pub translation_1: Option<[i64; 4]>,
    pub translation_2: Option<[i64; 4]>,
    pub translation_3: Option<[i64; 4]>,
    pub kny_translation: [i64; 4],
    pub sakai_translation: [i64; 4],
    pub push_table: Vec<String>,
    pub pull_table: Vec<String>,
    pub symmetry_cartan: Vec<Vec<i64>>,
    pub surface_cartan: Vec<Vec<i64>>,
}

impl GeometryReport {
    /// All gates: inverse pair, isometry, −K fixed, φ³ = ⟨0,1,−1,0⟩δ̂ with φ, φ² not translations.
    pub fn passes(&self) -> bool {
        self.pull_inverts_push
            && self.preserves_intersection
            && self.fixes_anticanonical
            && self.permutes_surface_roots
            && self.symmetry_cartan_is_a3
            && self.surface_cartan_is_d5
            && self.translation_1.is_none()
            && self.translation_2.is_none()
            && self.translation_3 == Some([0, 1, -1, 0])
    }
}

pub fn geometry_report() -> GeometryReport {
    let basis: Vec<PicardClass> = (0..RANK).map(PicardClass::basis).collect();
    let pull_inverts_push = basis.iter().all(|c| phi_pull(&phi_push(c)) == *c && phi_push(&phi_pull(c)) == *c);
    let preserves_intersection = basis
        .iter()
        .all(|a| basis.iter().all(|b| intersection(&phi_push(a), &phi_push(b)) == intersection(a, b)));
    let k = PicardClass::anticanonical();
    let surface = roots(RootKind::Surface);
    let permutes_surface_roots = surface.iter().all(|d| surface.contains(&phi_push(d)));
    let sym = roots(RootKind::Symmetry);
    GeometryReport {
        pull_inverts_push,
        preserves_intersection,
        fixes_anticanonical: phi_push(&k) == k,
        permutes_surface_roots,
        symmetry_cartan_is_a3: cartan(&sym) == affine_a3_cartan(),
        surface_cartan_is_d5: cartan(&surface) == affine_d5_cartan(),
        alpha_action: alpha_action(),
        translation_1: translation_check(1),
        translation_2: translation_check(2),
        translation_3: translation_check(3),
        kny_translation: KNY_TRANSLATION,
        sakai_translation: SAKAI_TRANSLATION,
        push_table: basis.iter().map(|c| format!("{c} -> {}", phi_push(c))).collect(),
        pull_table: basis.iter().map(|c| format!("{c} -> {}", phi_pull(c))).collect(),
        symmetry_cartan: cartan(&sym),
        surface_cartan: cartan(&surface),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(i: usize) -> PicardClass {
        PicardClass::e(i)
    }

    #[test]
    fn table_rows() {
        let (hx, hy) = (PicardClass::hx(), PicardClass::hy());
        assert_eq!(phi_push(&hx), hx + hy - e(5) - e(6));
        assert_eq!(phi_push(&e(3)), hx - e(6));
        assert_eq!(phi_pull(&hy), hx + hy - e(3) - e(4));
        assert_eq!(phi_pull(&e(5)), hy - e(4));
    }

    #[test]
    fn pairing_conventions() {
        let (hx, hy) = (PicardClass::hx(), PicardClass::hy());
        assert_eq!(intersection(&hx, &hy), 1);
        assert_eq!(intersection(&hx, &hx), 0);
        assert_eq!(intersection(&e(1), &e(1)), -1);
        assert_eq!(intersection(&e(1), &e(2)), 0);
        let k = PicardClass::anticanonical();
        assert_eq!(intersection(&k, &k), 0);
        assert_eq!(delta_hat(), k);
    }

    #[test]
    fn roots_and_cartan() {
        for r in roots(RootKind::Symmetry).iter().chain(roots(RootKind::Surface).iter()) {
            assert_eq!(intersection(r, r), -2);
        }
        for a in roots(RootKind::Symmetry) {
            for d in roots(RootKind::Surface) {
                assert_eq!(intersection(&a, &d), 0);
            }
        }
        assert_eq!(cartan(&roots(RootKind::Symmetry)), affine_a3_cartan());
        assert_eq!(cartan(&roots(RootKind::Surface)), affine_d5_cartan());
        // Null root of D_5^(1): δ_0 + δ_1 + 2δ_2 + 2δ_3 + δ_4 + δ_5 = −K.
        let d = roots(RootKind::Surface);
        let null = d[0] + d[1] + 2 * d[2] + 2 * d[3] + d[4] + d[5];
        assert_eq!(null, PicardClass::anticanonical());
    }

    #[test]
    fn action_on_symmetry_roots() {
        assert_eq!(alpha_action(), [[0, 0, 0, 1], [1, 1, 0, 0], [0, -1, 0, 0], [0, 1, 1, 0]]);
        assert_eq!(translation_check(1), None);
        assert_eq!(translation_check(2), None);
        assert_eq!(translation_check(3), Some([0, 1, -1, 0]));
        assert_eq!(translation_check(6), Some([0, 2, -2, 0]));
    }

    #[test]
    fn report_passes() {
        let r = geometry_report();
        assert!(r.passes(), "{r:?}");
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["translation_3"], serde_json::json!([0, 1, -1, 0]));
        assert_eq!(r.push_table[0], "H_x -> H_x + H_y - E_5 - E_6");
    }

    #[test]
    fn root_variables() {
        let eps = Rational::from((1, 10));
        let p = DpiCoefficients::special(&eps);
        let rv = root_variables_dp(0, &p).unwrap();
        let want = [(1, 3), (-1, 3), (2, 3), (1, 3)].map(Rational::from);
        assert_eq!(rv.a, want);
        for n in 0..8 {
            let rv = root_variables_dp(n, &p).unwrap();
            assert_eq!(rv.sum(), 1);
            let [al, be, ga] = rv.pv_params();
            assert_eq!(al, Rational::from(((n + 1) * (n + 1), 18)));
            assert_eq!(be, Rational::from((-1, 18)));
            assert_eq!(ga, Rational::from((-(n + 1), 3)));
            // Three steps shift the root variables by an integer vector.
            let r3 = root_variables_dp(n + 3, &p).unwrap();
            let diff: Vec<Rational> = (0..4).map(|i| Rational::from(&r3.a[i] - &rv.a[i])).collect();
            assert_eq!(diff, [0, -1, 1, 0].map(Rational::from).to_vec());
            let r1 = root_variables_dp(n + 1, &p).unwrap();
            assert!(r1.a.iter().zip(&rv.a).any(|(x, y)| !Rational::from(x - y).is_integer()));
        }
        let bad = DpiCoefficients { alpha: Rational::new(), beta: eps.clone(), gamma: Rational::from(-1) };
        assert!(matches!(root_variables_dp(0, &bad), Err(Error::DegenerateParams(_))));
        let bad = DpiCoefficients { alpha: eps.clone(), beta: eps, gamma: Rational::new() };
        assert!(matches!(base_points(0, &bad), Err(Error::DegenerateParams(_))));
    }

    #[test]
    fn base_point_cascades() {
        let p = DpiCoefficients::special(&Rational::from((1, 10)));
        let pts = base_points(2, &p).unwrap();
        assert_eq!(pts.len(), 8);
        let parents: Vec<Option<u8>> = pts.iter().map(|b| b.parent).collect();
        assert_eq!(parents, [None, Some(1), None, Some(3), None, Some(5), None, Some(7)]);
        assert_eq!(pts[1].coordinates[1], ("v1=x(y-gamma)".to_string(), "1/10".to_string()));
        assert_eq!(pts[3].coordinates[1].1, "2/5");
        assert_eq!(pts[5].coordinates[0].1, "3/10");
        assert_eq!(pts[6].coordinates[0].1, "-1");
    }

    fn class() -> impl Strategy<Value = PicardClass> {
        proptest::array::uniform10(-20i64..20).prop_map(PicardClass)
    }

    proptest! {
        #[test]
        fn isometry_on_random_classes(a in class(), b in class()) {
            prop_assert_eq!(intersection(&phi_push(&a), &phi_push(&b)), intersection(&a, &b));
            prop_assert_eq!(phi_pull(&phi_push(&a)), a);
            prop_assert_eq!(phi_power(&a, 3), phi_push(&phi_push(&phi_push(&a))));
            prop_assert_eq!(phi_power(&phi_power(&a, 4), -4), a);
        }
    }
}
