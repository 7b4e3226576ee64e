//! Command-line driver: problem generation, landscape studies, optimization
//! runs and subspace comparisons, each leaving data files plus a
//! `manifest.json` that can be replayed to regenerate them byte for byte.

pub mod commands;
pub mod error;
pub mod format;
pub mod manifest;
pub mod problem;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use error::{CliError, CliResult};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "GRASSCOMP_THREADS";

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "grasscomp", version, about = "Matrix completion on the Grassmann manifold")]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory receiving data files and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Worker threads for Monte Carlo trials (GRASSCOMP_THREADS takes precedence).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Divide the setting's m and n by this factor (default 10, or 100 for setting 2).
    #[arg(long, global = true)]
    pub scale: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum Command {
    /// Generate a ground truth (and optionally a sampled mask).
    Gen(GenArgs),
    /// Cost over a grid of two principal angles.
    Landscape(LandscapeArgs),
    /// Mean and spread of the partial cost at probe points for several p.
    SweepP(SweepArgs),
    /// Landscape grids for several p and their deviation from p = 1.
    CompareP(CompareArgs),
    /// Fixed-step Riemannian gradient descent.
    Optimize(OptimizeArgs),
    /// Principal angles and distances between two subspaces.
    Angles(AnglesArgs),
    /// Re-run a recorded command and compare output checksums.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Setting {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    /// 100 × 200, Σ = diag(1.4, 1.4, 1.4, 1, 1, 1).
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Fixture {
    /// M = [0, 1, 1]ᵀ observed on rows 2 and 3.
    Example1,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, conflicts_with_all = ["m", "n", "r", "sigma", "fixture"])]
    pub setting: Option<Setting>,
    #[arg(long, conflicts_with_all = ["m", "n", "r", "sigma"])]
    pub fixture: Option<Fixture>,
    #[arg(long, requires_all = ["n", "sigma"])]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Rank; defaults to the number of singular values.
    #[arg(long)]
    pub r: Option<usize>,
    /// Singular values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Sample a mask with this probability.
    #[arg(long, conflicts_with = "mask")]
    pub p: Option<f64>,
    /// Observe the truth on the entries listed in this mask file (values ignored).
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub hi: f64,
    /// 1-based column indices on the first axis (default: trailing half).
    #[arg(long, value_delimiter = ',')]
    pub first: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.2,0.1")]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 6)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01")]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Default: 1e-10·σ_max².
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long, default_value_t = 1e-14)]
    pub cost_tol: f64,
    /// Descend the partial cost on the problem's mask.
    #[arg(long)]
    pub partial: bool,
    /// Start from this dense matrix instead of a random point.
    #[arg(long, conflicts_with = "from_truth")]
    pub init: Option<PathBuf>,
    /// Start from the ground-truth subspace.
    #[arg(long)]
    pub from_truth: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnglesArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Orthonormalize inputs instead of rejecting them.
    #[arg(long)]
    pub orthonormalize: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    /// Manifest of the run to reproduce; outputs go to --out-dir.
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Parses `argv` (without the program name) and runs the command.
pub fn run(argv: &[String]) -> CliResult<()> {
    let full = std::iter::once("grasscomp".to_string()).chain(argv.iter().cloned());
    let cli = Cli::try_parse_from(full).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            std::process::exit(0)
        }
        _ => CliError::Precondition(e.to_string()),
    })?;
    configure_threads(cli.threads)?;
    commands::execute(&cli, argv)
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::precondition(format!("{THREADS_ENV} must be a positive integer")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = from_env.or(flag) {
        if n == 0 {
            return Err(CliError::precondition("thread count must be positive"));
        }
        // A pool may already exist when several commands run in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
