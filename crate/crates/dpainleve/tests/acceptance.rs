//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 3 fails: the outer interlacing links break at j = 5 for ε = 1/2
//! and ε = 1 in exact arithmetic. The run still evaluates it in full and
//! prints FAIL; it only exits nonzero if that failure changes shape or any
//! other gate fails. Criterion 10 is reported, never gated.

use dpainleve::cfrac::{eval_cfrac, interlace_check, series_s0, xi_zeta, DEFAULT_TERM_CAP};
use dpainleve::fixed_point::{bound_rational, conjecture_check, eps_star, j1_n0_margin, solve_positive, taylor_c, BoundTable, DEFAULT_DEGREE_CAP};
use dpainleve::geometry::{geometry_report, intersection, phi_pull, phi_push, PicardClass, RANK};
use dpainleve::painleve_v::{chain_check, integrate_eps_riccati, IntegratorOptions};
use dpainleve::poly::IntPoly;
use dpainleve::scalar::{bits_for_digits, hp};
use dpainleve::special_fn::{v0_closed, y0_riccati_residual, BesselCoeffs};
use dpainleve::wronskian::{check_identity, identity_grid, rel_residual, v_closed, v_table, Identity, DEFAULT_IDENTITY_SEED};
use rand::{Rng, SeedableRng};
use rug::{Float, Integer, Rational};
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn q(p: i64, d: i64) -> Rational {
    Rational::from((p, d))
}

fn rel(a: &Float, b: &Float) -> f64 {
    rel_residual(a, b)
}

fn eps_float(e: &Rational, digits: u32) -> Float {
    Float::with_val(bits_for_digits(digits), e)
}

fn t_of(eps: &Float) -> Float {
    let p = eps.prec();
    Float::with_val(p, Float::with_val(p, eps * 3u32).recip_ref())
}

fn triple_pipeline() -> Verdict {
    let mut worst = 0f64;
    for e in [q(1, 100), q(5, 100), q(1, 10), q(1, 2), q(1, 1), q(2, 1), q(5, 1)] {
        let x = eps_float(&e, 40);
        let fp = match solve_positive(&x, 60, 1e-12, 1_000_000) {
            Ok(r) => r.sequence.get(0).clone(),
            Err(err) => return verdict(false, format!("fixed point at eps={e}: {err}")),
        };
        let cf = match eval_cfrac(&x, 1e-14, DEFAULT_TERM_CAP) {
            Ok(c) => c.value,
            Err(err) => return verdict(false, format!("cfrac at eps={e}: {err}")),
        };
        let bessel = match v0_closed(&x, 40) {
            Ok(v) => v,
            Err(err) => return verdict(false, format!("closed form at eps={e}: {err}")),
        };
        worst = worst.max(rel(&fp, &cf)).max(rel(&fp, &bessel)).max(rel(&cf, &bessel));
    }
    verdict(worst <= 1e-10, format!("max pairwise relative deviation {worst:.2e} (limit 1e-10)"))
}

fn exact_constants() -> Verdict {
    let s0 = series_s0(5);
    let s_ok = s0 == [1, 2, 12, 112, 1392, 21472].map(Integer::from);
    let xi: Vec<u64> = (0..5).map(|i| xi_zeta(i).0).collect();
    let xi_ok = xi == [1, 2, 4, 5, 7];
    let b3 = bound_rational(3, 0, DEFAULT_DEGREE_CAP);
    let b3_ok = matches!(&b3, Ok(b) if b.num() == &IntPoly::from_i64(&[0, 1, 12, 24]) && b.den() == &IntPoly::from_i64(&[1, 14, 40, 24]));
    let c_ok = (0..=20usize).all(|n| {
        let m = n as i64;
        taylor_c(1, n) == 2 * (m + 1) && taylor_c(2, n) == 4 * (m * m + 2 * m + 2)
    });
    verdict(
        s_ok && xi_ok && b3_ok && c_ok,
        format!("s0 {s_ok}, xi {xi_ok}, b_0^(3) {b3_ok}, c^(1),c^(2) for n<=20 {c_ok}"),
    )
}

/// Returns the verdict plus whether the failure matches the documented one.
fn nesting_and_lace() -> (Verdict, bool) {
    let mut nest_ok = true;
    let mut failed_links = Vec::new();
    for e in [q(1, 10), q(1, 2), q(1, 1)] {
        let t = BoundTable::compute(&e, 12, 20).expect("bound table");
        for n in 0..=20usize {
            for j in 0..=5i64 {
                let (a, b, c, d) = (t.b(2 * j - 1, n), t.b(2 * j + 1, n), t.b(2 * j + 2, n), t.b(2 * j, n));
                nest_ok &= a >= 0 && a < b && b < c && c < d;
            }
        }
        let rep = interlace_check(&e, 5).expect("interlace");
        for l in rep.links.iter().filter(|l| !l.holds()) {
            failed_links.push(format!("eps={e}: {} vs {}", l.lhs, l.rhs));
        }
    }
    let documented = [
        "eps=1/2: b^(9) vs eta^(11)",
        "eps=1/2: eta^(12) vs b^(10)",
        "eps=1: b^(9) vs eta^(11)",
        "eps=1: eta^(12) vs b^(10)",
    ];
    let as_documented = nest_ok && failed_links == documented;
    let detail = if failed_links.is_empty() {
        format!("nesting {nest_ok}; interlacing holds")
    } else {
        format!("nesting {nest_ok}; interlacing fails at {}", failed_links.join(", "))
    };
    (verdict(nest_ok && failed_links.is_empty(), detail), as_documented)
}

fn asymptotic_limits() -> Verdict {
    let eps = 0.1f64;
    let n = 2000usize;
    let t = BoundTable::compute(&eps, 7, n).expect("bound table");
    let mut worst = 0f64;
    for j in 0..=3usize {
        let target_even = 1.0 / (j as f64 + 1.0);
        let even = (t.rho(2 * j as i64, n) - target_even).abs() / target_even;
        let odd_val = 2.0 * eps * (n as f64 + 1.0) * t.rho(2 * j as i64 + 1, n);
        let odd = (odd_val - (j as f64 + 1.0)).abs() / (j as f64 + 1.0);
        worst = worst.max(even).max(odd);
    }
    verdict(worst <= 0.05, format!("max relative distance to the limits {:.3}% (limit 5%)", worst * 100.0))
}

fn wronskian_chain() -> Verdict {
    let digits = 80;
    let e = eps_float(&q(1, 10), digits + 10);
    let rows = match v_table(&e, 20, digits) {
        Ok(r) => r,
        Err(err) => return verdict(false, err.to_string()),
    };
    let max_res = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let positive = rows.iter().all(|r| r.v_f64 > 0.0);
    let fp = solve_positive(&e, 60, 1e-13, 1_000_000).expect("fixed point");
    let t = t_of(&e);
    let mut dev = 0f64;
    for n in 0..=20i64 {
        let v = v_closed(n, &t, &BesselCoeffs::positive(), digits).expect("closed form");
        dev = dev.max(rel(fp.sequence.get(n), &v));
    }
    verdict(
        max_res <= 1e-40 && positive && dev <= 1e-10,
        format!("max residual {max_res:.2e}, positive {positive}, max deviation from fixed point {dev:.2e}"),
    )
}

fn determinant_identities() -> Verdict {
    let points = identity_grid(DEFAULT_IDENTITY_SEED, 30);
    let mut worst = 0f64;
    let mut seen = std::collections::BTreeSet::new();
    for p in &points {
        match check_identity(p, 60) {
            Ok(res) => {
                for (name, r) in res {
                    seen.insert(name);
                    worst = worst.max(r);
                }
            }
            Err(err) => return verdict(false, format!("{p:?}: {err}")),
        }
    }
    let kinds = [Identity::BilinearA, Identity::BilinearB, Identity::Symmetry, Identity::Trilinear];
    let covered = kinds.iter().all(|k| points.iter().any(|p| p.identity == *k)) && seen.len() == 6;
    verdict(worst <= 1e-30 && covered, format!("{} identities over 30 points, max relative residual {worst:.2e}", seen.len()))
}

fn geometry_exact() -> Verdict {
    let r = geometry_report();
    let basis: Vec<PicardClass> = (0..RANK).map(PicardClass::basis).collect();
    let inverse = basis.iter().all(|c| phi_pull(&phi_push(c)) == *c);
    let form = basis
        .iter()
        .all(|a| basis.iter().all(|b| intersection(&phi_push(a), &phi_push(b)) == intersection(a, b)));
    let k = PicardClass::anticanonical();
    let ok = inverse && form && phi_push(&k) == k && r.passes();
    verdict(ok, format!("inverse {inverse}, isometry {form}, phi^3 translation {:?}", r.translation_3))
}

fn riccati_checks() -> Verdict {
    let digits = 50;
    let bits = bits_for_digits(digits + 10);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0f64;
    for _ in 0..10 {
        let c1 = q(rng.gen_range(0..=30), 10);
        let c2 = q(rng.gen_range(1..=30), 10);
        let t = q(rng.gen_range(20..=1000), 100);
        match y0_riccati_residual(&Float::with_val(bits, &t), &c1, &c2, digits) {
            Ok(r) => worst = worst.max(r.abs().to_f64()),
            Err(err) => return verdict(false, format!("(C1,C2,t)=({c1},{c2},{t}): {err}")),
        }
    }
    let opts = IntegratorOptions { tol: 1e-10, ..Default::default() };
    let start = v0_closed(&hp(digits, 0.01), digits).expect("v0").to_f64();
    let mut ode = f64::INFINITY;
    if let Ok(traj) = integrate_eps_riccati(0.01, start, 1.0, &opts) {
        ode = [0.1, 0.5, 1.0]
            .iter()
            .map(|&e| {
                let exact = v0_closed(&hp(digits, e), digits).expect("v0").to_f64();
                traj.eval(e).map_or(f64::INFINITY, |y| (y[0] - exact).abs())
            })
            .fold(0.0, f64::max);
    }
    verdict(
        worst <= 1e-40 && ode <= 1e-8,
        format!("Riccati residual {worst:.2e} over 10 points; integration error {ode:.2e}"),
    )
}

fn bt_chain() -> Verdict {
    let digits = 50;
    let e = eps_float(&q(1, 10), digits + 10);
    let rows = match chain_check(&t_of(&e), 10, digits) {
        Ok(r) => r,
        Err(err) => return verdict(false, err.to_string()),
    };
    let dd = rows.iter().map(|r| r.r_plus.max(r.r_minus)).fold(0.0, f64::max);
    let gen = rows.iter().map(|r| r.dpigen).fold(0.0, f64::max);
    verdict(dd <= 1e-30 && gen <= 1e-30, format!("dd residual {dd:.2e}, general dP_I residual {gen:.2e} for n<=10"))
}

fn conjecture_probe() -> Verdict {
    let mut parts = Vec::new();
    let mut all = true;
    for e in [q(1, 10), q(1, 2), q(1, 1), q(6, 5)] {
        let rep = conjecture_check(&e, 6, 50).expect("conjecture");
        all &= rep.all_hold();
        parts.push(format!("eps={e}: {}", if rep.all_hold() { "hold" } else { "violated" }));
    }
    let s = eps_star();
    let below = j1_n0_margin(&(s - 1e-6)) > 0.0;
    let above = j1_n0_margin(&(s + 1e-6)) < 0.0;
    parts.push(format!("eps* = {s:.12} (j=1, n=0 margin changes sign there: {})", below && above));
    verdict(all, parts.join("; "))
}

fn main() {
    let documented = std::cell::Cell::new(false);
    let lace = || {
        let (v, doc) = nesting_and_lace();
        documented.set(doc);
        v
    };
    let criteria: [(u32, &str, &dyn Fn() -> Verdict, bool); 10] = [
        (1, "triple-pipeline agreement", &triple_pipeline, true),
        (2, "exact constants", &exact_constants, true),
        (3, "bracket nesting and interlacing", &lace, true),
        (4, "asymptotic limits", &asymptotic_limits, true),
        (5, "Wronskian chain", &wronskian_chain, true),
        (6, "determinant identities", &determinant_identities, true),
        (7, "Picard lattice", &geometry_exact, true),
        (8, "Riccati and ODE cross-checks", &riccati_checks, true),
        (9, "Backlund chain consistency", &bt_chain, true),
        (10, "conjecture probe (report only)", &conjecture_probe, false),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f, gated) in criteria {
        let start = Instant::now();
        let v = f();
        let tag = match (v.pass, gated) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "REPORT",
        };
        println!("criterion {id:>2} [{tag}] {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), v.detail);
        let known = id == 3 && documented.get();
        if gated && !v.pass && !known {
            unexpected.push(id);
        }
    }
    if !documented.get() {
        println!("criterion 3 no longer fails in the documented way");
        unexpected.push(3);
    }
    if unexpected.is_empty() {
        println!("acceptance: all gates pass except criterion 3 (documented failure of the interlacing chain at j = 5)");
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
