//! One function per subcommand.

use crate::{csv_header, to_csv, Check, CliError, CliResult, Command, EpsValue, Format, Outcome, RunConfig, Suite, VerifyReport, FORMAT_VERSION};
use dpainleve::cfrac::{convergent_csv, convergent_table, eval_cfrac, interlace_check, DEFAULT_TERM_CAP};
use dpainleve::fixed_point::{conjecture_check, delta_scan, eps_star, solve_positive, BoundTable};
use dpainleve::geometry::{base_points, geometry_report, phi_pull, phi_push, root_variables_dp, DpiCoefficients, PicardClass, RANK};
use dpainleve::painleve_v::{chain_check, integrate_eps_riccati, IntegratorOptions};
use dpainleve::scalar::bits_for_digits;
use dpainleve::special_fn::{v0_closed, y0_riccati_residual, BesselCoeffs};
use dpainleve::wronskian::{check_identity, identity_grid, DEFAULT_IDENTITY_SEED, v_closed, v_table, v_table_csv, v_table_json};
use rayon::prelude::*;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub const IDENTITY_POINTS: usize = 30;
/// Extra points the fixed-point solve carries beyond n_max.
const FP_MARGIN: usize = 40;

pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.command {
        Command::Solve => solve(cfg),
        Command::Bounds => bounds(cfg),
        Command::Cfrac => cfrac(cfg),
        Command::ClosedForm => closed_form(cfg),
        Command::Verify => verify(cfg),
        Command::Geometry => geometry(cfg),
        Command::DeltaScan => delta(cfg),
        Command::Sweep => sweep(cfg),
    }
}

/// Residual threshold for identities evaluated at `digits`.
pub fn strict_tol(digits: u32) -> f64 {
    10f64.powi(-(digits as i32 / 2))
}

fn render(x: &Float, digits: u32) -> String {
    x.to_string_radix(10, Some(digits as usize))
}

fn rel_dev(a: &Float, b: &Float) -> f64 {
    let d = Float::with_val(a.prec(), a - b).abs();
    (d / b.clone().abs()).to_f64()
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable report") + "\n"
}

fn fp_tol(cfg: &RunConfig) -> f64 {
    (cfg.tol * 1e-3).max(10f64.powi(-(cfg.digits as i32 - 5)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    pub n: usize,
    pub fixed_point: String,
    pub closed_form: String,
    pub cfrac: Option<String>,
    pub max_rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub eps: String,
    pub v0_fixed_point: String,
    pub v0_cfrac: String,
    pub v0_closed: String,
    pub b0_0: f64,
    pub b0_1: f64,
    pub b0_2: f64,
    pub b0_3: f64,
    pub max_rel_dev: f64,
}

/// v_n for n ≤ n_max from the fixed-point solve and the closed form, plus v_0 from the fraction.
fn solve_table(eps: &EpsValue, n_max: usize, cfg: &RunConfig) -> CliResult<Vec<SolveRow>> {
    let d = cfg.digits;
    let e = eps.float(d + 10);
    let fp = solve_positive(&e, (n_max + FP_MARGIN).max(60), fp_tol(cfg), 1_000_000)?;
    let cf = eval_cfrac(&e, fp_tol(cfg), DEFAULT_TERM_CAP)?.value;
    let bits = bits_for_digits(d + 10);
    let t = Float::with_val(bits, Float::with_val(bits, &e * 3u32).recip_ref());
    let coeffs = BesselCoeffs::positive();
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let closed = v_closed(n as i64, &t, &coeffs, d)?;
        let f = fp.sequence.get(n as i64);
        let mut dev = rel_dev(f, &closed);
        let cfrac = (n == 0).then(|| {
            dev = dev.max(rel_dev(&cf, &closed)).max(rel_dev(&cf, f));
            render(&cf, d)
        });
        rows.push(SolveRow { n, fixed_point: render(f, d), closed_form: render(&closed, d), cfrac, max_rel_dev: dev });
    }
    Ok(rows)
}

fn grid_row(eps: &EpsValue, cfg: &RunConfig) -> CliResult<GridRow> {
    let d = cfg.digits;
    let e = eps.float(d + 10);
    let fp = solve_positive(&e, 60, fp_tol(cfg), 1_000_000)?;
    let cf = eval_cfrac(&e, fp_tol(cfg), DEFAULT_TERM_CAP)?.value;
    let closed = v0_closed(&e, d)?;
    let f = fp.sequence.get(0);
    let bt = BoundTable::compute(&e, 3, 0)?;
    let dev = rel_dev(f, &closed).max(rel_dev(&cf, &closed)).max(rel_dev(&cf, f));
    Ok(GridRow {
        eps: eps.text.clone(),
        v0_fixed_point: render(f, d),
        v0_cfrac: render(&cf, d),
        v0_closed: render(&closed, d),
        b0_0: bt.b(0, 0).to_f64(),
        b0_1: bt.b(1, 0).to_f64(),
        b0_2: bt.b(2, 0).to_f64(),
        b0_3: bt.b(3, 0).to_f64(),
        max_rel_dev: dev,
    })
}

fn solve(cfg: &RunConfig) -> CliResult<Outcome> {
    if cfg.eps.is_empty() {
        return Err(CliError::Usage("solve needs --eps or --eps-grid".into()));
    }
    if cfg.grid {
        let rows = cfg.eps.par_iter().map(|e| grid_row(e, cfg)).collect::<CliResult<Vec<_>>>()?;
        let pass = rows.iter().all(|r| r.max_rel_dev <= cfg.tol);
        let body = match cfg.format {
            Format::Csv => to_csv(csv_header("solve_grid", &[("digits", cfg.digits.to_string()), ("tol", cfg.tol.to_string())]), &rows),
            Format::Json => pretty(&json!({
                "format": "dpainleve solve_grid", "version": FORMAT_VERSION,
                "digits": cfg.digits, "tol": cfg.tol, "rows": rows, "pass": pass,
            })),
        };
        return Ok(Outcome { body, pass });
    }
    let eps = cfg.single_eps()?;
    let rows = solve_table(eps, cfg.n_max.unwrap_or(20), cfg)?;
    let pass = rows.iter().all(|r| r.max_rel_dev <= cfg.tol);
    let body = match cfg.format {
        Format::Csv => to_csv(
            csv_header("solve", &[("eps", eps.text.clone()), ("digits", cfg.digits.to_string()), ("tol", cfg.tol.to_string())]),
            &rows,
        ),
        Format::Json => pretty(&json!({
            "format": "dpainleve solve", "version": FORMAT_VERSION, "eps": eps.text,
            "digits": cfg.digits, "tol": cfg.tol, "rows": rows, "pass": pass,
        })),
    };
    Ok(Outcome { body, pass })
}

fn bounds(cfg: &RunConfig) -> CliResult<Outcome> {
    let eps = cfg.single_eps()?;
    let table = BoundTable::compute(&eps.exact, cfg.k_max.unwrap_or(5), cfg.n_max.unwrap_or(10))?;
    let body = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => pretty(&table.to_json()),
    };
    Ok(Outcome { body, pass: true })
}

fn cfrac(cfg: &RunConfig) -> CliResult<Outcome> {
    let eps = cfg.single_eps()?;
    let k_max = cfg.k_max.unwrap_or(10);
    let body = match cfg.format {
        Format::Csv => convergent_csv(&eps.exact, k_max),
        Format::Json => {
            let v = eval_cfrac(&eps.float(cfg.digits), fp_tol(cfg), DEFAULT_TERM_CAP)?;
            pretty(&json!({
                "format": "dpainleve convergents", "version": FORMAT_VERSION, "eps": eps.text,
                "rows": convergent_table(&eps.exact, k_max),
                "value": render(&v.value, cfg.digits), "error_bound": v.error_bound, "terms": v.terms,
            }))
        }
    };
    Ok(Outcome { body, pass: true })
}

fn closed_form(cfg: &RunConfig) -> CliResult<Outcome> {
    let eps = cfg.single_eps()?;
    let rows = v_table(&eps.float(cfg.digits + 10), cfg.n_max.unwrap_or(20), cfg.digits)?;
    let pass = rows.iter().all(|r| r.v_f64 > 0.0 && r.residual <= strict_tol(cfg.digits));
    let body = match cfg.format {
        Format::Csv => v_table_csv(&eps.text, cfg.digits, &rows),
        Format::Json => v_table_json(&eps.text, cfg.digits, &rows) + "\n",
    };
    Ok(Outcome { body, pass })
}

fn check(name: &str, parameters: serde_json::Value, residual: f64, pass: bool) -> Check {
    Check { check_name: name.into(), parameters, residual, pass, report_only: false }
}

fn exact_check(name: &str, parameters: serde_json::Value, ok: bool) -> Check {
    check(name, parameters, if ok { 0.0 } else { 1.0 }, ok)
}

pub fn suite_geometry(eps: &EpsValue, n_max: usize) -> CliResult<Vec<Check>> {
    let r = geometry_report();
    let none = json!({});
    let mut out = vec![
        exact_check("pull_inverts_push", none.clone(), r.pull_inverts_push),
        exact_check("preserves_intersection", none.clone(), r.preserves_intersection),
        exact_check("fixes_anticanonical", none.clone(), r.fixes_anticanonical),
        exact_check("permutes_surface_roots", none.clone(), r.permutes_surface_roots),
        exact_check("symmetry_cartan_a3", none.clone(), r.symmetry_cartan_is_a3),
        exact_check("surface_cartan_d5", none.clone(), r.surface_cartan_is_d5),
        exact_check("phi1_not_translation", json!({"power": 1}), r.translation_1.is_none()),
        exact_check("phi2_not_translation", json!({"power": 2}), r.translation_2.is_none()),
        exact_check("phi3_translation", json!({"power": 3, "vector": r.translation_3}), r.translation_3 == Some([0, 1, -1, 0])),
    ];
    let p = DpiCoefficients::special(&eps.exact);
    for n in 0..=n_max as i64 {
        let rv = root_variables_dp(n, &p)?;
        let [a, b, g] = rv.pv_params();
        let want = [Rational::from(((n + 1) * (n + 1), 18)), Rational::from((-1, 18)), Rational::from((-(n + 1), 3))];
        let params = json!({"eps": eps.text, "n": n, "root_variables": rv.a.iter().map(|x| x.to_string()).collect::<Vec<_>>()});
        out.push(exact_check("root_variables_pv_params", params, rv.sum() == 1 && [a, b, g] == want));
    }
    Ok(out)
}

pub fn suite_determinants(digits: u32) -> CliResult<Vec<Check>> {
    let tol = strict_tol(digits);
    let points = identity_grid(DEFAULT_IDENTITY_SEED, IDENTITY_POINTS);
    let per_point = points
        .par_iter()
        .map(|p| {
            let res = check_identity(p, digits)?;
            let params = serde_json::to_value(p).expect("point");
            Ok(res.into_iter().map(|(name, r)| check(&name, params.clone(), r, r <= tol)).collect::<Vec<_>>())
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

/// Worst relative margin (value − bound)/bound per j; negative means the inequality holds.
pub fn suite_conjecture(eps: &EpsValue, j_max: usize, n_max: usize) -> CliResult<Vec<Check>> {
    let rep = conjecture_check(&eps.exact, j_max, n_max)?;
    let report_only = eps.to_f64() > eps_star();
    let mut out = Vec::new();
    for j in 1..=j_max {
        let es: Vec<_> = rep.entries.iter().filter(|e| e.j == j).collect();
        for (name, which) in [("rho_product_odd", 0), ("rho_product_even", 1)] {
            let margin = es
                .iter()
                .map(|e| if which == 0 { (e.first - e.first_bound) / e.first_bound } else { (e.second - e.second_bound) / e.second_bound })
                .fold(f64::NEG_INFINITY, f64::max);
            let ok = es.iter().all(|e| if which == 0 { e.first_ok } else { e.second_ok });
            out.push(Check {
                check_name: name.into(),
                parameters: json!({"eps": eps.text, "j": j, "n_max": n_max, "eps_star": rep.eps_star}),
                residual: margin,
                pass: ok,
                report_only,
            });
        }
    }
    Ok(out)
}

pub fn suite_interlace(eps: &EpsValue, j_max: usize) -> CliResult<Vec<Check>> {
    let rep = interlace_check(&eps.exact, j_max)?;
    Ok(rep
        .links
        .iter()
        .map(|l| {
            exact_check(
                "interlace_link",
                json!({"eps": eps.text, "lhs": l.lhs, "rhs": l.rhs, "relation": l.relation, "equality_allowed": l.equality_allowed}),
                l.holds(),
            )
        })
        .collect())
}

pub fn suite_chain(eps: &EpsValue, n_max: usize, digits: u32) -> CliResult<Vec<Check>> {
    let tol = strict_tol(digits);
    let bits = bits_for_digits(digits + 10);
    let e = eps.float(digits + 10);
    let t = Float::with_val(bits, Float::with_val(bits, &e * 3u32).recip_ref());
    let rows = chain_check(&t, n_max as i64, digits)?;
    let mut out = Vec::new();
    for r in rows {
        let params = json!({"eps": eps.text, "n": r.n});
        out.push(check("dd_plus", params.clone(), r.r_plus, r.r_plus <= tol));
        out.push(check("dd_minus", params.clone(), r.r_minus, r.r_minus <= tol));
        out.push(check("dpi_general", params.clone(), r.dpigen, r.dpigen <= tol));
        out.push(check("pv_residual", params, r.pv, r.pv <= tol));
    }
    Ok(out)
}

pub fn suite_riccati(digits: u32, tol: f64) -> CliResult<Vec<Check>> {
    let strict = strict_tol(digits);
    let mut out = Vec::new();
    let bits = bits_for_digits(digits + 10);
    for (c1, c2, t) in [((0, 1), (1, 1), (1, 2)), ((1, 1), (1, 1), (3, 1)), ((-2, 3), (5, 4), (7, 5)), ((3, 1), (-1, 2), (11, 2))] {
        let (c1, c2) = (Rational::from(c1), Rational::from(c2));
        let tq = Rational::from(t);
        let r = y0_riccati_residual(&Float::with_val(bits, &tq), &c1, &c2, digits)?.abs().to_f64();
        let params = json!({"c1": c1.to_string(), "c2": c2.to_string(), "t": tq.to_string()});
        out.push(check("y0_riccati", params, r, r <= strict));
    }
    let opts = IntegratorOptions { tol: tol.min(1e-10), ..Default::default() };
    let start = v0_closed(&Float::with_val(bits, 0.01), digits)?.to_f64();
    let traj = integrate_eps_riccati(0.01, start, 1.0, &opts)?;
    for e in [0.05, 0.1, 0.5, 1.0] {
        let exact = v0_closed(&Float::with_val(bits, e), digits)?.to_f64();
        let got = traj.eval(e).map(|y| y[0]).unwrap_or(f64::NAN);
        let d = (got - exact).abs();
        out.push(check("eps_riccati_integration", json!({"eps": e, "integrator_tol": opts.tol}), d, d <= 1e-8));
    }
    Ok(out)
}

fn verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let d = cfg.digits;
    let eps_default = |s| cfg.eps_or(s);
    let mut checks = Vec::new();
    let all = cfg.suite == Suite::All;
    if all || cfg.suite == Suite::Geometry {
        checks.extend(suite_geometry(&eps_default("0.1")?, cfg.n_max.unwrap_or(5))?);
    }
    if all || cfg.suite == Suite::Determinants {
        checks.extend(suite_determinants(d)?);
    }
    if all || cfg.suite == Suite::Conjecture {
        checks.extend(suite_conjecture(&eps_default("1")?, cfg.k_max.unwrap_or(5), cfg.n_max.unwrap_or(20))?);
    }
    if all || cfg.suite == Suite::Interlace {
        checks.extend(suite_interlace(&eps_default("0.1")?, cfg.k_max.unwrap_or(5))?);
    }
    if all || cfg.suite == Suite::Chain {
        checks.extend(suite_chain(&eps_default("0.1")?, cfg.n_max.unwrap_or(10), d)?);
    }
    if all || cfg.suite == Suite::Riccati {
        checks.extend(suite_riccati(d, cfg.tol)?);
    }
    let report = VerifyReport::new(cfg.suite, d, checks);
    let body = match cfg.format {
        Format::Json => pretty(&report),
        Format::Csv => {
            #[derive(Serialize)]
            struct Flat<'a> {
                check_name: &'a str,
                parameters: String,
                residual: f64,
                pass: bool,
                report_only: bool,
            }
            let rows: Vec<Flat> = report
                .checks
                .iter()
                .map(|c| Flat {
                    check_name: &c.check_name,
                    parameters: c.parameters.to_string(),
                    residual: c.residual,
                    pass: c.pass,
                    report_only: c.report_only,
                })
                .collect();
            to_csv(csv_header("verify", &[("suite", format!("{:?}", cfg.suite).to_lowercase()), ("digits", d.to_string())]), &rows)
        }
    };
    Ok(Outcome { body, pass: report.pass })
}

fn geometry(cfg: &RunConfig) -> CliResult<Outcome> {
    let eps = cfg.eps_or("0.1")?;
    let report = geometry_report();
    let pass = report.passes();
    let body = match cfg.format {
        Format::Json => {
            let p = DpiCoefficients::special(&eps.exact);
            let n_max = cfg.n_max.unwrap_or(3) as i64;
            let rv = (0..=n_max).map(|n| root_variables_dp(n, &p)).collect::<dpainleve::Result<Vec<_>>>()?;
            pretty(&json!({
                "format": "dpainleve geometry", "version": FORMAT_VERSION, "eps": eps.text,
                "lattice": report, "root_variables": rv, "base_points_n0": base_points(0, &p)?, "pass": pass,
            }))
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                class: String,
                push: String,
                pull: String,
            }
            let rows: Vec<Row> = (0..RANK)
                .map(|i| {
                    let c = PicardClass::basis(i);
                    Row { class: c.to_string(), push: phi_push(&c).to_string(), pull: phi_pull(&c).to_string() }
                })
                .collect();
            to_csv(csv_header("geometry", &[]), &rows)
        }
    };
    Ok(Outcome { body, pass })
}

fn delta(cfg: &RunConfig) -> CliResult<Outcome> {
    let eps = cfg.single_eps()?;
    let e = eps.to_f64();
    let k = cfg.k_max.unwrap_or(2);
    let (lo, hi) = (cfg.z_min.unwrap_or(e), cfg.z_max.unwrap_or(8.0 * e));
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Usage("--z-min must be below --z-max".into()));
    }
    let scan = delta_scan(k, e, lo, hi, cfg.samples);
    let body = match cfg.format {
        Format::Json => pretty(&json!({"format": "dpainleve delta_scan", "version": FORMAT_VERSION, "scan": scan})),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                z: f64,
                delta: Option<f64>,
            }
            let rows: Vec<Row> = scan.samples.iter().map(|&(z, delta)| Row { z, delta }).collect();
            let fmt_list = |v: Vec<String>| format!("[{}]", v.join(";"));
            let minima = fmt_list(scan.minima.iter().map(|m| format!("{m:.6}")).collect());
            let poles = fmt_list(scan.poles.iter().map(|(a, b)| format!("{a:.6}..{b:.6}")).collect());
            to_csv(csv_header("delta_scan", &[("k", k.to_string()), ("eps", eps.text.clone()), ("minima", minima), ("poles", poles)]), &rows)
        }
    };
    Ok(Outcome { body, pass: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: String,
    pub v0: String,
    pub max_rel_dev: f64,
    pub max_residual: f64,
    pub conjecture_holds: bool,
    pub below_eps_star: bool,
}

fn sweep_row(eps: &EpsValue, cfg: &RunConfig, n_max: usize) -> CliResult<SweepRow> {
    let rows = solve_table(eps, n_max, cfg)?;
    let vt = v_table(&eps.float(cfg.digits + 10), n_max, cfg.digits)?;
    let conj = conjecture_check(&eps.exact, 3, n_max)?;
    Ok(SweepRow {
        eps: eps.text.clone(),
        v0: rows[0].closed_form.clone(),
        max_rel_dev: rows.iter().map(|r| r.max_rel_dev).fold(0.0, f64::max),
        max_residual: vt.iter().map(|r| r.residual).fold(0.0, f64::max),
        conjecture_holds: conj.all_hold(),
        below_eps_star: eps.to_f64() < eps_star(),
    })
}

fn sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    if cfg.eps.is_empty() {
        return Err(CliError::Usage("sweep needs --eps-grid or --eps".into()));
    }
    let n_max = cfg.n_max.unwrap_or(10);
    let rows = cfg.eps.par_iter().map(|e| sweep_row(e, cfg, n_max)).collect::<CliResult<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.max_rel_dev <= cfg.tol);
    let body = match cfg.format {
        Format::Csv => to_csv(csv_header("sweep", &[("n_max", n_max.to_string()), ("digits", cfg.digits.to_string())]), &rows),
        Format::Json => pretty(&json!({
            "format": "dpainleve sweep", "version": FORMAT_VERSION, "n_max": n_max,
            "digits": cfg.digits, "tol": cfg.tol, "rows": rows, "pass": pass,
        })),
    };
    Ok(Outcome { body, pass })
}
