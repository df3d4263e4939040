use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmac_core::ReflectionConstraint;

mod commands;
mod config;
mod error;
mod output;

use config::{Overrides, ScenarioConfig, OUT_DIR_ENV};
use error::CliError;

/// Capacity region of the multiplicative MAC formed by a reflecting
/// surface riding on a primary link.
#[derive(Parser)]
#[command(name = "mmac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// C1, C2 under both constraints, the two C2 bounds and C_sum per SNR.
    Capacity,
    /// Region boundaries per SNR and reflection constraint.
    Region,
    /// Optimized mass-point laws and their certificates per mu1.
    Distributions,
    /// Rate pairs of the two phase-splitting schemes.
    Scheme,
    /// Quadrature against Monte Carlo; exits 1 if any |z| > 3.
    Validate,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated transmit SNRs in dB.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Reflection constraint: unit or disk (default both).
    #[arg(long, global = true)]
    constraint: Option<ReflectionConstraint>,
    /// Comma-separated mu1 values in (0, 0.5).
    #[arg(long, global = true, value_delimiter = ',')]
    mu1_grid: Option<Vec<f64>>,
    /// Largest n in alpha = pi / n.
    #[arg(long, global = true)]
    alpha_n_max: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Fail with exit code 3 when a boundary point is not certified.
    #[arg(long, global = true)]
    strict: bool,
    /// Output directory.
    #[arg(long, global = true, help = format!("Output directory [default: ${OUT_DIR_ENV} or ./out]"))]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if let Some(jobs) = c.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let over = Overrides {
        snr_db: c.snr_db.clone(),
        constraint: c.constraint,
        mu1_grid: c.mu1_grid.clone(),
        alpha_n_max: c.alpha_n_max,
        seed: c.seed,
        out: c.out.clone(),
    };
    let cfg = ScenarioConfig::load(c.config.as_deref(), &over)?;
    match cli.command {
        Command::Capacity => commands::capacity(&cfg),
        Command::Region => commands::region(&cfg, c.strict),
        Command::Distributions => commands::distributions(&cfg, c.strict),
        Command::Scheme => commands::scheme(&cfg),
        Command::Validate => commands::validate(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
