//! `svip`: run displacement algorithms, scaling sweeps, exact expectations,
//! identity checks, bound tables and the acceptance suite from the shell.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svip_core::algorithms::Algorithm;
use svip_core::experiments::RuleKind;
use svip_core::verification::Tier;

#[derive(Parser)]
#[command(name = "svip", version, about = "Sensor displacement under (s,v)-interference constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one seeded deployment.
    Simulate(SimulateArgs),
    /// Estimate mean cost over an n-grid and check the fitted exponent.
    Sweep(SweepArgs),
    /// Exact expected cost of the equal-spacing algorithm for even a.
    Exact(ExactArgs),
    /// Check the Stirling / Eulerian identities exactly.
    Identities(IdentitiesArgs),
    /// Tabulate the shortfall and excess bound sums over an n-grid.
    Bounds(BoundsArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Args, Clone)]
pub struct OutputArgs {
    /// Directory for output files.
    #[arg(long, env = "SVIP_OUTPUT_DIR", default_value = "svip-out")]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

/// Flags shared by `simulate` and `sweep`. Each overrides the config file.
#[derive(Args, Clone)]
pub struct RunArgs {
    /// JSON config with flat keys named like the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mv1, i1, mvd or id.
    #[arg(long)]
    pub alg: Option<Algorithm>,
    /// Cost exponent.
    #[arg(long)]
    pub a: Option<f64>,
    /// Dimension (1 for mv1/i1).
    #[arg(long)]
    pub d: Option<u32>,
    /// below, at (one-over-n) or above the threshold.
    #[arg(long)]
    pub s_rule: Option<RuleKind>,
    #[arg(long)]
    pub v_rule: Option<RuleKind>,
    /// Offset of s from the threshold.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Offset of v from the threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of sensors (m^d on a grid).
    #[arg(long)]
    pub n: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Worker threads; never changes the results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Allowed slope deviation.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Replace the tabulated exponent.
    #[arg(long, allow_hyphen_values = true)]
    pub predicted_exponent: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct ExactArgs {
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub n: Vec<u64>,
    /// Even cost exponent.
    #[arg(long, default_value_t = 2)]
    pub a: u32,
    /// Spacing is (1 + eps1)/n.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub eps1: Vec<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct IdentitiesArgs {
    /// Largest even a for the alternating Stirling sums.
    #[arg(long, default_value_t = 20)]
    pub max_a: u32,
    /// Largest row for the row-sum and bridge identities.
    #[arg(long, default_value_t = 30)]
    pub max_m: usize,
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// s = (1 - eps)/n.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// v = (1 + tau)/n.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// s = s_scale/n, replacing eps.
    #[arg(long)]
    pub s_scale: Option<f64>,
    /// v = v_scale/n, replacing tau.
    #[arg(long)]
    pub v_scale: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "quick")]
    pub tier: Tier,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<u32>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Why a command did not succeed.
pub enum Failure {
    /// A verification verdict came out negative (exit 1).
    Verification(String),
    /// Bad input or configuration (exit 2).
    Usage(String),
}

impl From<svip_core::Error> for Failure {
    fn from(e: svip_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Exact(args) => commands::exact(&args),
        Command::Identities(args) => commands::identities(&args),
        Command::Bounds(args) => commands::bounds(&args),
        Command::Verify(args) => commands::verify(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
