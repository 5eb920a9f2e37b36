//! Command-line front end: scenario runs and sweeps.
//!
//! Exit status is 0 when every check passes, 1 when one fails and 2 for
//! unreadable or invalid input.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::matrix::Tol;
use crate::scenario::{self, Report, RunOptions, SchemaError};
use crate::sweep::{self, SweepKind, UniformityPair};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "approxk", version, about = "Approximate Mayer-Vietoris boundary maps on matrix and loop algebras")]
pub struct Cli {
    /// Membership tolerance; overrides APPROXK_TOL.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized steps; overrides the scenario's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample count for loop ambients.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for independent checks and sweep draws.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every check of a scenario file.
    Run { scenario: PathBuf },
    /// Randomized sweep: riesz, invcut or uniformity.
    Sweep {
        kind: String,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        /// Matrix sizes cycled through by uniformity draws.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        dims: Vec<usize>,
        /// Principal angle of a hereditary pair; the arc pair when absent.
        #[arg(long)]
        theta: Option<f64>,
        /// Uniformity constant compared against each ratio.
        #[arg(long, default_value_t = 3.0)]
        limit: f64,
    },
    /// Only the ideal-structure checks of a scenario.
    CheckIdealStructure { scenario: PathBuf },
    /// Only the boundary checks of a scenario.
    Boundary { scenario: PathBuf },
    /// Only the iota-lift checks of a scenario.
    IotaLift { scenario: PathBuf },
    /// Only the factorization checks of a scenario.
    SigmaWitness { scenario: PathBuf },
    /// Only the Whitehead split checks of a scenario.
    Whitehead { scenario: PathBuf },
    /// Only the uniformity checks of a scenario.
    Uniformity { scenario: PathBuf },
    /// Only the product checks of a scenario.
    ProductCheck { scenario: PathBuf },
}

/// Output text and exit status of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn input_error(msg: impl std::fmt::Display) -> Outcome {
    Outcome { text: format!("error: {msg}\n"), code: EXIT_INPUT }
}

fn tol_from(cli: &Cli) -> Tol {
    let tol = Tol::from_env();
    match cli.tol {
        Some(t) => tol.with_membership(t),
        None => tol,
    }
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    }
}

fn run_scenario(cli: &Cli, path: &PathBuf, only: Option<&str>) -> Outcome {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return input_error(format!("{}: {e}", path.display())),
    };
    let mut s = match scenario::parse(&text) {
        Ok(s) => s,
        Err(SchemaError(m)) => return input_error(format!("{}: {m}", path.display())),
    };
    if let Some(kind) = only {
        s.checks.retain(|c| c.kind.label() == kind);
        if s.checks.is_empty() {
            return input_error(format!("{} has no {kind} checks", path.display()));
        }
    }
    let opts = RunOptions { tol: tol_from(cli), seed: cli.seed, grid: cli.grid, jobs: cli.jobs };
    match scenario::run(&s, text.as_bytes(), &opts) {
        Ok(r) => Outcome { text: render(&r, cli.format.unwrap_or(Format::Json)), code: r.exit_code() },
        Err(SchemaError(m)) => input_error(m),
    }
}

fn rows_out<T: serde::Serialize>(rows: &[T], format: Format, passed: bool) -> Outcome {
    let text = match format {
        Format::Csv => sweep::to_csv(rows).map_err(|e| e.to_string()),
        Format::Json => serde_json::to_string_pretty(rows).map(|s| s + "\n").map_err(|e| e.to_string()),
    };
    match text {
        Ok(text) => Outcome { text, code: if passed { EXIT_OK } else { EXIT_FAILED } },
        Err(e) => input_error(e),
    }
}

fn run_sweep(cli: &Cli, kind: &str, count: u64, dims: &[usize], theta: Option<f64>, limit: f64) -> Outcome {
    let kind: SweepKind = match kind.parse() {
        Ok(k) => k,
        Err(e) => return input_error(e),
    };
    let tol = tol_from(cli);
    if let Err(e) = tol.validate() {
        return input_error(e);
    }
    let seed = cli.seed.unwrap_or(0);
    let format = cli.format.unwrap_or(Format::Csv);
    let numeric = |e: crate::error::Error| Outcome { text: format!("error: {}: {e}\n", e.name()), code: EXIT_FAILED };
    match kind {
        SweepKind::Riesz => match sweep::riesz_sweep(count, seed, &tol, cli.jobs) {
            Ok(rows) => rows_out(&rows, format, rows.iter().all(|r| r.passed)),
            Err(e) => numeric(e),
        },
        SweepKind::Invcut => match sweep::invcut_sweep(count, seed, &tol, cli.jobs) {
            Ok(rows) => rows_out(&rows, format, rows.iter().all(|r| r.passed)),
            Err(e) => numeric(e),
        },
        SweepKind::Uniformity => {
            let pair = match theta {
                Some(theta) => UniformityPair::Hereditary { theta },
                None => UniformityPair::Arcs { grid: cli.grid.unwrap_or(360) },
            };
            match sweep::uniformity_sweep(pair, count as usize, dims, limit, seed, &tol) {
                Ok(rows) => rows_out(&rows, format, rows.iter().all(|r| r.passed)),
                Err(e) => numeric(e),
            }
        }
    }
}

/// Executes a parsed command line without touching the process.
pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Run { scenario } => run_scenario(cli, scenario, None),
        Command::Sweep { kind, count, dims, theta, limit } => run_sweep(cli, kind, *count, dims, *theta, *limit),
        Command::CheckIdealStructure { scenario } => run_scenario(cli, scenario, Some("ideal_structure")),
        Command::Boundary { scenario } => run_scenario(cli, scenario, Some("boundary")),
        Command::IotaLift { scenario } => run_scenario(cli, scenario, Some("iota_lift")),
        Command::SigmaWitness { scenario } => run_scenario(cli, scenario, Some("sigma_witness")),
        Command::Whitehead { scenario } => run_scenario(cli, scenario, Some("whitehead")),
        Command::Uniformity { scenario } => run_scenario(cli, scenario, Some("uniformity")),
        Command::ProductCheck { scenario } => run_scenario(cli, scenario, Some("product")),
    }
}

/// Parses `args`, runs, writes the output and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let out = execute(&cli);
    if out.code == EXIT_INPUT {
        eprint!("{}", out.text);
        return out.code;
    }
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &out.text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(out.text.as_bytes()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => out.code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
