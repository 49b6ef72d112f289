//! `geostop` command-line tool.
//!
//! Exit codes: 0 success, 1 failed check or runtime failure, 2 usage error.

mod bounds;
mod config;
mod reports;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value or combination.
    Usage(String),
    /// A required value was given neither as a flag nor in the config file.
    Missing(String),
    Lib(geostop::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Missing(flag) => write!(f, "the required argument `{flag}` was not provided"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<geostop::Error> for CliError {
    fn from(e: geostop::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// A check ran and failed.
    Failed,
}

#[derive(Parser, Debug)]
#[command(
    name = "geostop",
    version,
    about = "Regret bounds for expert advice under geometric stopping"
)]
pub struct Cli {
    /// key = value file supplying defaults for any long flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate lower/upper regret bounds and C_N over a range of N
    Bounds(BoundsArgs),
    /// Plot C_N against N as SVG, with the plotted data as CSV
    Figure(FigureArgs),
    /// Monte Carlo estimate of the expected regret of a player/adversary pair
    Simulate(SimulateArgs),
    /// Exact value iteration on the integer lattice, checked against the potentials
    Oracle(OracleArgs),
    /// Run the invariant and condition suites on sampled points
    Verify(VerifyArgs),
}

/// Flags shared by `bounds` and `figure`.
#[derive(Args, Debug, Clone)]
pub struct CurveArgs {
    /// Single number of experts
    #[arg(long, conflicts_with = "n_range")]
    pub n: Option<usize>,
    /// Inclusive range of expert counts, `A:B`
    #[arg(long, value_name = "A:B")]
    pub n_range: Option<String>,
    /// Stopping probability per round, in (0, 1)
    #[arg(long)]
    pub delta: Option<f64>,
    /// `all` or a comma list of exp, heat, max
    #[arg(long)]
    pub families: Option<String>,
    /// none, estimated, user or both (E = 0 rows plus error-inflated rows)
    #[arg(long)]
    pub error_mode: Option<String>,
    /// Largest N for which error constants are estimated numerically
    #[arg(long, value_name = "N")]
    pub estimate_max_n: Option<usize>,
    /// Third-order constant of the heat lower bound
    #[arg(long)]
    pub k3_heat_lb: Option<f64>,
    /// Fourth-order constant of the heat lower bound
    #[arg(long)]
    pub k4_heat_lb: Option<f64>,
    /// Third-order constant of the heat upper bound
    #[arg(long)]
    pub k3_heat_ub: Option<f64>,
    /// Third-order constant of the max lower bound
    #[arg(long)]
    pub k3_max_lb: Option<f64>,
    /// Third-order constant of the max upper bound
    #[arg(long)]
    pub k3_max_ub: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub curves: CurveArgs,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Write the table here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    #[command(flatten)]
    pub curves: CurveArgs,
    /// Logarithmic N axis
    #[arg(long)]
    pub log_x: bool,
    /// Output prefix; writes PREFIX.svg and PREFIX.csv
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// exp, heat, max, uniform or follow-best
    #[arg(long)]
    pub player: Option<String>,
    /// heat or max
    #[arg(long)]
    pub adversary: Option<String>,
    /// Number of experts
    #[arg(long)]
    pub n: Option<usize>,
    /// Stopping probability per round, in (0, 1]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of independent games
    #[arg(long)]
    pub trials: Option<u64>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Round cap per trial (default ceil(50 / delta))
    #[arg(long)]
    pub cap: Option<u64>,
    /// CSV file with a header and one result row
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Solve against this fixed adversary (heat or max)
    #[arg(long, conflicts_with = "player")]
    pub adversary: Option<String>,
    /// Solve against this fixed player (exp, heat or max)
    #[arg(long)]
    pub player: Option<String>,
    /// Number of experts
    #[arg(long)]
    pub n: Option<usize>,
    /// Stopping probability per round, in (0, 1)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Largest coordinate spread kept in the table
    #[arg(long)]
    pub radius: Option<u32>,
    /// Value-iteration and sandwich tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Error term in the sandwich: estimated, none or user
    #[arg(long)]
    pub error_mode: Option<String>,
    /// Third-order constant of the heat lower bound (error-mode user)
    #[arg(long)]
    pub k3_heat_lb: Option<f64>,
    /// Fourth-order constant of the heat lower bound (error-mode user)
    #[arg(long)]
    pub k4_heat_lb: Option<f64>,
    /// Third-order constant of the heat upper bound (error-mode user)
    #[arg(long)]
    pub k3_heat_ub: Option<f64>,
    /// Third-order constant of the max lower bound (error-mode user)
    #[arg(long)]
    pub k3_max_lb: Option<f64>,
    /// Third-order constant of the max upper bound (error-mode user)
    #[arg(long)]
    pub k3_max_ub: Option<f64>,
    /// CSV of every lattice state and its value
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// lower, upper, final-time, translation, gradients, simplex, permutation, pde or all
    #[arg(long)]
    pub suite: Option<String>,
    /// Number of experts
    #[arg(long)]
    pub n: Option<usize>,
    /// Stopping probability per round, in (0, 1)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Random points per check (seven structured points are always added)
    #[arg(long)]
    pub samples: Option<usize>,
    /// Tolerance of the lower and upper conditions
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GEOSTOP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "GEOSTOP_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<Status, CliError> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Bounds(a) => bounds::cmd_bounds(a, &cfg),
        Command::Figure(a) => bounds::cmd_figure(a, &cfg),
        Command::Simulate(a) => reports::cmd_simulate(a, &cfg),
        Command::Oracle(a) => reports::cmd_oracle(a, &cfg),
        Command::Verify(a) => reports::cmd_verify(a, &cfg),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::Figure(_) => "figure",
            Command::Simulate(_) => "simulate",
            Command::Oracle(_) => "oracle",
            Command::Verify(_) => "verify",
        }
    }
}

/// Prints `message` with the subcommand's usage line and exits with code 2.
fn usage_exit(command: &str, kind: ErrorKind, message: String) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(command) {
        Some(sub) => sub.error(kind, message).exit(),
        None => cmd.error(kind, message).exit(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match dispatch(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(CliError::Missing(flag)) => usage_exit(
            name,
            ErrorKind::MissingRequiredArgument,
            format!("the required argument `{flag}` was not provided"),
        ),
        Err(CliError::Usage(m)) => usage_exit(name, ErrorKind::InvalidValue, m),
        Err(CliError::Lib(e)) => match e {
            geostop::Error::Quadrature { .. } => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            other => usage_exit(name, ErrorKind::ValueValidation, other.to_string()),
        },
        Err(CliError::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
