//! Command implementations behind the `dpainleve` binary.
//!
//! Every command turns a validated [`RunConfig`] into an [`Outcome`]: the
//! rendered data plus whether its checks passed. Reports carry a format name
//! and version so downstream scripts can pin the layout.

pub mod commands;

use dpainleve::scalar::{bits_for_digits, parse_rational};
use dpainleve::Error;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Suite {
    Geometry,
    Determinants,
    Conjecture,
    Interlace,
    Chain,
    Riccati,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Command {
    Solve,
    Bounds,
    Cfrac,
    ClosedForm,
    Verify,
    Geometry,
    DeltaScan,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Bounds => "bounds",
            Command::Cfrac => "cfrac",
            Command::ClosedForm => "closed-form",
            Command::Verify => "verify",
            Command::Geometry => "geometry",
            Command::DeltaScan => "delta-scan",
            Command::Sweep => "sweep",
        }
    }
}

/// Failure modes mapped onto exit codes 1 (check/computation) and 2 (usage).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Structured report written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Compute(e) => ("compute", e.to_string()),
            CliError::Io(e) => ("io", e.to_string()),
        };
        serde_json::json!({ "error": kind, "message": message, "exit_code": self.exit_code() })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// An exact ε value with its original spelling.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsValue {
    pub text: String,
    pub exact: Rational,
}

impl EpsValue {
    pub fn parse(s: &str) -> CliResult<Self> {
        let exact = parse_rational(s).ok_or_else(|| CliError::Usage(format!("cannot parse eps value '{s}'")))?;
        if exact <= 0 {
            return Err(CliError::Usage(format!("eps must be positive, got '{s}'")));
        }
        Ok(EpsValue { text: s.trim().to_string(), exact })
    }

    fn from_exact(exact: Rational) -> Self {
        EpsValue { text: render_decimal(&exact), exact }
    }

    pub fn float(&self, digits: u32) -> Float {
        Float::with_val(bits_for_digits(digits), &self.exact)
    }

    pub fn to_f64(&self) -> f64 {
        self.exact.to_f64()
    }
}

/// Terminating decimals print as decimals, anything else as p/q.
fn render_decimal(q: &Rational) -> String {
    let mut den = q.denom().clone();
    let mut scale = 0u32;
    for p in [2u32, 5] {
        while den.is_divisible_u(p) {
            den /= p;
        }
    }
    if den != 1 {
        return q.to_string();
    }
    let mut x = q.clone();
    while !x.is_integer() {
        x *= 10u32;
        scale += 1;
    }
    let n = x.numer().clone();
    if scale == 0 {
        return n.to_string();
    }
    let neg = n < 0;
    let digits = n.abs().to_string();
    let pad = format!("{:0>width$}", digits, width = scale as usize + 1);
    let (ip, fp) = pad.split_at(pad.len() - scale as usize);
    format!("{}{ip}.{fp}", if neg { "-" } else { "" })
}

/// Parse `start:stop:step` into the exact points start, start+step, … ≤ stop.
pub fn parse_grid(text: &str) -> CliResult<Vec<EpsValue>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("grid '{text}' is not start:stop:step")));
    }
    let q = |s: &str| parse_rational(s).ok_or_else(|| CliError::Usage(format!("cannot parse grid value '{s}'")));
    let (start, stop, step) = (q(parts[0])?, q(parts[1])?, q(parts[2])?);
    if step <= 0 {
        return Err(CliError::Usage("grid step must be positive".into()));
    }
    if start <= 0 {
        return Err(CliError::Usage("grid start must be positive".into()));
    }
    let mut out = Vec::new();
    let mut x = start;
    while x <= stop {
        out.push(EpsValue::from_exact(x.clone()));
        x += &step;
        if out.len() > 1_000_000 {
            return Err(CliError::Usage("grid has more than 10^6 points".into()));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("grid '{text}' is empty")));
    }
    Ok(out)
}

/// Validated settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub eps: Vec<EpsValue>,
    /// Whether ε came from a grid rather than a single --eps.
    pub grid: bool,
    pub n_max: Option<usize>,
    pub k_max: Option<usize>,
    pub digits: u32,
    pub tol: f64,
    pub format: Format,
    pub suite: Suite,
    /// Scan window and sample count for delta-scan.
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub samples: usize,
}

pub const MIN_DIGITS: u32 = 15;

impl RunConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        command: Command,
        eps: Option<&str>,
        eps_grid: Option<&str>,
        n_max: Option<usize>,
        k_max: Option<usize>,
        digits: u32,
        tol: f64,
        format: Format,
        suite: Suite,
    ) -> CliResult<Self> {
        if digits < MIN_DIGITS {
            return Err(CliError::Usage(format!("--digits must be at least {MIN_DIGITS}")));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage("--tol must be positive".into()));
        }
        let (eps, grid) = match (eps, eps_grid) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --eps or --eps-grid".into())),
            (Some(e), None) => (vec![EpsValue::parse(e)?], false),
            (None, Some(g)) => (parse_grid(g)?, true),
            (None, None) => (Vec::new(), false),
        };
        Ok(RunConfig { command, eps, grid, n_max, k_max, digits, tol, format, suite, z_min: None, z_max: None, samples: 400 })
    }

    /// The single ε a command needs.
    pub fn single_eps(&self) -> CliResult<&EpsValue> {
        match (self.eps.as_slice(), self.grid) {
            ([e], false) => Ok(e),
            (_, true) => Err(CliError::Usage(format!("{} takes --eps, not --eps-grid", self.command.name()))),
            _ => Err(CliError::Usage(format!("{} needs --eps", self.command.name()))),
        }
    }

    pub fn eps_or(&self, default: &str) -> CliResult<EpsValue> {
        if self.eps.is_empty() {
            EpsValue::parse(default)
        } else {
            self.single_eps().cloned()
        }
    }
}

/// One named check in a verify report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_name: String,
    pub parameters: serde_json::Value,
    pub residual: f64,
    pub pass: bool,
    /// Outside the proven range: recorded, never counted as a failure.
    #[serde(default)]
    pub report_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format: String,
    pub version: u32,
    pub suite: Suite,
    pub digits: u32,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(suite: Suite, digits: u32, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass || c.report_only);
        VerifyReport { format: "dpainleve verify".into(), version: FORMAT_VERSION, suite, digits, checks, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !(c.pass || c.report_only))
    }
}

/// Rendered command output and its verdict.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

/// Versioned first line of every CSV output.
pub fn csv_header(command: &str, fields: &[(&str, String)]) -> String {
    let mut s = format!("# dpainleve {command} v{FORMAT_VERSION}");
    for (k, v) in fields {
        s.push_str(&format!(" {k}={v}"));
    }
    s.push('\n');
    s
}

/// Serialize rows with the csv crate under a versioned header.
pub fn to_csv<T: Serialize>(header: String, rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8");
    header + &body
}
