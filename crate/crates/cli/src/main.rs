//! `misclassit`: fit, bootstrap and simulate logistic regression with a
//! misclassified response.
//!
//! Machine-readable JSON goes to stdout (or `--out`), human-readable notes to
//! stderr. Exit codes: 0 success, 1 output failure, 2 bad input or usage,
//! 3 solver or bootstrap failure, 4 non-identifiable misclassification rates.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use misclassit::io::{to_json, ErrorReport};

#[derive(Debug)]
pub enum CliError {
    Core(misclassit::Error),
    Usage(String),
    Output(String),
}

impl From<misclassit::Error> for CliError {
    fn from(e: misclassit::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use misclassit::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Output(_) => 1,
            CliError::Core(e) => match e.root() {
                E::Schema(_) | E::InvalidInput(_) | E::DimensionMismatch { .. } => 2,
                E::Identifiability { .. } => 4,
                _ => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "USAGE",
            CliError::Output(_) => "OUTPUT",
            CliError::Core(e) => e.kind(),
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Output(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "misclassit", version, about = "Logistic regression with a misclassified binary response")]
struct Cli {
    /// Worker threads for bootstrap and simulation.
    #[arg(long, global = true, env = "MISCLASSIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML file with [read], [solver], [bootstrap] and [simulate] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave wall-clock timing out of the report.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV with columns y (empty when unobserved), ytilde, optional group, x1..xp.
    #[arg(long)]
    pub data: PathBuf,
    /// Prepend an intercept column.
    #[arg(long)]
    pub intercept: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Pmle,
    Jmle,
    Cmle,
    Naive,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiArg {
    Wald,
    None,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value = "pmle")]
    pub method: MethodArg,
    #[command(flatten)]
    pub data: DataArgs,
    /// Treat the false-negative rate as known to be zero.
    #[arg(long)]
    pub theta2_zero: bool,
    /// Estimate misclassification rates separately per `group`.
    #[arg(long)]
    pub grouped: bool,
    /// Intervals to attach; Wald intervals are available for the PMLE family.
    #[arg(long, value_enum)]
    pub ci: Option<CiArg>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of bootstrap resamples.
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lower tail probability; intervals have level 1 - 2 eta.
    #[arg(long, default_value_t = 0.025)]
    pub eta: f64,
    /// Linear functional c, comma separated, one entry per column (intercept included).
    #[arg(long)]
    pub c: Option<String>,
    /// Covariate profile x0 for a risk interval, comma separated.
    #[arg(long)]
    pub risk_x0: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// table1 | table2 | table3 | table4 | table5
    #[arg(long)]
    pub design: String,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap resamples per replicate (coverage designs).
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// Skip bootstrap intervals in coverage designs.
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Drop non-converged fits and wild rate estimates before aggregating.
    #[arg(long)]
    pub exclude_failures: bool,
    /// CSV table path; the JSON sidecar goes next to it. Defaults to `<design>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one estimator and report estimates, diagnostics and intervals.
    Fit(FitArgs),
    /// Bootstrap the PMLE and report percentile intervals.
    Bootstrap(BootstrapArgs),
    /// Run a simulation design and write its table.
    Simulate(SimulateArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set thread count: {e}")))?;
    }
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Bootstrap(a) => commands::bootstrap(&a),
        Command::Simulate(a) => commands::simulate(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {}", e.message());
            let report = ErrorReport::new(e.kind(), e.message(), code as i32);
            if let Ok(text) = to_json(&report) {
                print!("{text}");
            }
            ExitCode::from(code)
        }
    }
}
