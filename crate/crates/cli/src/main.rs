//! `fbmlab`: asymptotic tail formulas, Monte Carlo tail estimates, constant
//! estimation and validation suites from the command line.
//!
//! Exit codes: 0 success, 1 I/O or unexpected failure, 2 usage or
//! precondition failure, 3 sampler failure, 4 cache write failure,
//! 5 validation check failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fbmlab", version, about = "Drawdown/drawup tail asymptotics for fBm with trend")]
struct Cli {
    /// Worker threads for Monte Carlo loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Flat JSON experiment document; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the asymptotic tail approximation at each threshold.
    Asymptotic(AsymptoticArgs),
    /// Monte Carlo tail frequencies at n and 2n grid steps.
    Simulate(SimulateArgs),
    /// Estimate a Pickands or Piterbarg constant and update the cache file.
    Constants(ConstantsArgs),
    /// Run the lemma and/or convergence suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// drawdown or drawup
    #[arg(long)]
    functional: Option<String>,
    /// Hurst index in (0,1)
    #[arg(long = "H")]
    hurst: Option<f64>,
    /// Drift (default 0)
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Horizon (default 1)
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Threshold; repeat for several
    #[arg(long = "u")]
    u: Vec<f64>,
}

#[derive(Debug, Args)]
struct AsymptoticArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Drawup constant for H < 1/2: statement or proof_derived (default)
    #[arg(long)]
    variant: Option<String>,
    /// Constants cache file (default: $FBMLAB_CACHE, else fbmlab-constants.json)
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Simulate missing Pickands constants instead of failing
    #[arg(long)]
    simulate_constants: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of paths (default 10000)
    #[arg(long)]
    paths: Option<u64>,
    /// Coarse grid steps n; paths are simulated at 2n (default 1024)
    #[arg(long)]
    steps: Option<usize>,
    /// Run seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// auto (default), cholesky or circulant
    #[arg(long)]
    sampler: Option<String>,
    /// Write per-path drawdown/drawup values to this CSV file
    #[arg(long)]
    dump_paths: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// pickands or piterbarg
    #[arg(long)]
    kind: Option<String>,
    /// Hurst index in (0,1]
    #[arg(long = "H")]
    hurst: Option<f64>,
    /// Piterbarg penalty nu > 0
    #[arg(long)]
    nu: Option<f64>,
    /// Truncation horizon; repeat to give the Pickands ladder (default 1 2 4; Piterbarg 16)
    #[arg(long = "b")]
    b: Vec<f64>,
    /// Grid step (default 1/256)
    #[arg(long)]
    eta: Option<f64>,
    /// Number of simulations (default 100000)
    #[arg(long)]
    sims: Option<u64>,
    /// Run seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Cache file (default: $FBMLAB_CACHE, else fbmlab-constants.json)
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// lemmas, convergence or all
    #[arg(long)]
    suite: Option<String>,
    /// Directory for report.json, CSV tables and plot data (default fbmlab-validate)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Paths per convergence sample (default 100000)
    #[arg(long)]
    paths: Option<u64>,
    /// Coarse grid steps for convergence samples (default 1024)
    #[arg(long)]
    steps: Option<usize>,
    /// Run seed (default 1)
    #[arg(long)]
    seed: Option<u64>,
    /// Constants cache file (default: $FBMLAB_CACHE, else fbmlab-constants.json)
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match config::ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(msg) => commands::usage_error(&msg),
        },
        None => config::ExperimentConfig::default(),
    };
    if let Some(n) = cli.threads {
        commands::configure_threads(n);
    }
    let outcome = match cli.command {
        Command::Asymptotic(args) => commands::asymptotic(args, &config),
        Command::Simulate(args) => commands::simulate(args, &config),
        Command::Constants(args) => commands::constants(args, &config),
        Command::Validate(args) => commands::validate(args, &config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
