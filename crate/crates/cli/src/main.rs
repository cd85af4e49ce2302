//! `spectre-da`: run spectrum-estimation experiments for DA Markov chains
//! from a TOML config, writing trajectory.csv and meta.json.

mod config;
mod dataset;
mod runner;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, ThreadsSpec};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable overriding the configured thread count; the
/// `--threads` flag wins over both.
const THREADS_ENV: &str = "SPECTRE_DA_THREADS";

#[derive(Parser)]
#[command(name = "spectre-da", version, about = "Spectrum estimation for DA Markov operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write trajectory.csv + meta.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads for matrix-row construction.
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch() -> Result<(), runner::RunError> {
    match Cli::parse().command {
        Command::Run { config, out_dir, threads, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let env_threads = std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
                .filter(|n| *n > 0);
            if let Some(n) = threads.or(env_threads) {
                cfg.threads = ThreadsSpec::Count(n);
            }
            let summary = runner::run_experiment(&cfg, &out_dir)?;
            println!(
                "wrote {} ({} rows) and {} in {:.1}s",
                summary.trajectory_path.display(),
                summary.rows,
                summary.metadata_path.display(),
                summary.wall_seconds
            );
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!(
                "config OK: experiment={}, m_grid={:?}, burn_in={}, top_k={}, rescale={}, seed={}",
                cfg.experiment.name(),
                cfg.m_grid,
                cfg.burn_in.expect("defaulted"),
                cfg.top_k.expect("defaulted"),
                cfg.rescale.expect("defaulted"),
                cfg.master_seed
            );
            Ok(())
        }
    }
}
