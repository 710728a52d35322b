use clap::{Args, Parser, Subcommand};
use dpainleve_cli::{commands, CliError, Command, Format, RunConfig, Suite};
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dpainleve", version, about = "Positive solution of discrete Painleve I: solvers, bounds and identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// v_n from the fixed-point solve, continued fraction and closed form, with deviations
    Solve(Common),
    /// Exact upper/lower bound table b_n^(k)
    Bounds(Common),
    /// Convergents of the continued fraction for v_0
    Cfrac(Common),
    /// v_n from the Bessel Wronskian closed form with residuals
    ClosedForm(Common),
    /// Run an identity suite and report residuals
    Verify(Common),
    /// Picard lattice action, root data and base points
    Geometry(Common),
    /// Sample Delta^(k)(z, eps) and locate minima and poles
    DeltaScan(Common),
    /// Per-eps summary over a grid
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Single eps value, exact decimal or p/q
    #[arg(long)]
    eps: Option<String>,
    /// Grid start:stop:step
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Significant decimal digits
    #[arg(long, default_value_t = 50)]
    digits: u32,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// delta-scan window (defaults: eps and 8 eps)
    #[arg(long)]
    z_min: Option<f64>,
    #[arg(long)]
    z_max: Option<f64>,
    #[arg(long, default_value_t = 400)]
    samples: usize,
}

fn split(cmd: Cmd) -> (Command, Common) {
    match cmd {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Bounds(c) => (Command::Bounds, c),
        Cmd::Cfrac(c) => (Command::Cfrac, c),
        Cmd::ClosedForm(c) => (Command::ClosedForm, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Geometry(c) => (Command::Geometry, c),
        Cmd::DeltaScan(c) => (Command::DeltaScan, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    }
}

fn run(cmd: Command, a: Common) -> Result<bool, CliError> {
    let mut cfg = RunConfig::new(cmd, a.eps.as_deref(), a.eps_grid.as_deref(), a.n_max, a.k_max, a.digits, a.tol, a.format, a.suite)?;
    cfg.z_min = a.z_min;
    cfg.z_max = a.z_max;
    cfg.samples = a.samples;
    let outcome = commands::run(&cfg)?;
    match &a.out {
        Some(path) => std::fs::write(path, &outcome.body)?,
        None => std::io::stdout().write_all(outcome.body.as_bytes())?,
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = split(cli.command);
    match run(cmd, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", serde_json::json!({"error": "check_failed", "command": cmd.name(), "exit_code": 1}));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
