use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod commands;
mod problem_file;
mod report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed files, flags, or problem data; exit status 2.
    #[error("input error: {0}")]
    Input(String),
    /// The analysis itself failed; exit status 1.
    #[error("operation failed: {0}")]
    Operation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Operation(_) => 1,
        }
    }
}

impl From<vpa_core::Error> for CliError {
    fn from(e: vpa_core::Error) -> Self {
        use vpa_core::Error as E;
        match e {
            E::Parse(_) | E::DimensionMismatch { .. } | E::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Operation(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Objective and constraint values, gradients, and feasibility at `--at`.
    Eval,
    /// Rabier function value and its multipliers at `--at`.
    Rabier,
    /// Mangasarian-Fromovitz qualification probe at `--at`.
    Mfcq,
    /// Tangency variety membership at `--at`.
    Tangency,
    /// Sphere-slice traces over the radius schedule (writes trace.csv).
    Trace,
    /// Verdicts for properness, Palais-Smale, Cerami, and M-tameness.
    Classify,
    /// Boundedness probe of the section below `ybar`.
    Section,
    /// Weighted-sum Pareto front (writes archive.json and front.csv).
    Solve,
    /// Existence report combining qualification, section, and condition evidence.
    Verdict,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Rabier => "rabier",
            Command::Mfcq => "mfcq",
            Command::Tangency => "tangency",
            Command::Trace => "trace",
            Command::Classify => "classify",
            Command::Section => "section",
            Command::Solve => "solve",
            Command::Verdict => "verdict",
        }
    }
}

/// Asymptotic condition checks and Pareto solving for polynomial vector
/// optimization problems.
#[derive(Debug, Parser)]
#[command(name = "vpa", version)]
pub struct Cli {
    pub command: Command,
    /// Problem file (JSON with `n`, `objectives`, `equalities`, `inequalities`, optional `ybar`).
    #[arg(long)]
    pub problem: PathBuf,
    /// Run configuration (JSON); defaults apply to omitted fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Point for pointwise commands, e.g. `--at 0,0,5`.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Reference values, e.g. `--ybar=-1,2` or `--ybar=+inf,0`; overrides the problem file.
    #[arg(long, allow_hyphen_values = true)]
    pub ybar: Option<String>,
    /// JSON list of points forming an extra trace for `trace` and `classify`.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vpa {}: {}", cli.command.name(), e);
            ExitCode::from(e.exit_code())
        }
    }
}
