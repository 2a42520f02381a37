//! `casimir`: force curves, synthetic traces and trace analysis from the
//! command line. Distances are in nm, forces in pN and signals in V.

mod commands;
mod config;
mod error;
mod materials;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::JobConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "casimir", version, about)]
struct Cli {
    /// TOML job configuration with one table per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate ε(iξ) of a material.
    Eps {
        /// Built-in name (gold, ethanol, vacuum) or material TOML file.
        #[arg(long)]
        material: Option<String>,
    },
    /// Sphere-plate Lifshitz force curve.
    Force,
    /// Synthetic deflection traces with ground truth.
    Simulate,
    /// Hydrodynamic calibration of 𝒞 and d₀ from deflection traces.
    Calibrate {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Static force curve, ensemble statistics and histograms from velocity
    /// triplet traces.
    Extract {
        /// Calibration JSON written by `calibrate`.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Power-law fit of conductivity against molarity.
    ConductivityFit { file: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = JobConfig::load(cli.config.as_deref())?;
    let ctx = Ctx::new(cfg, cli.out, cli.seed)?;
    match cli.command {
        Command::Eps { material } => commands::eps(&ctx, material.as_deref()),
        Command::Force => commands::force(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Calibrate { traces } => commands::calibrate(&ctx, &traces),
        Command::Extract {
            calibration,
            traces,
        } => commands::extract(&ctx, &traces, calibration.as_deref()),
        Command::ConductivityFit { file } => commands::conductivity_fit(&ctx, &file),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
