//! Experiment orchestration: build the model(s), run the full-length chain
//! once, sweep the eigenvalue trajectory over the m grid, and emit
//! trajectory.csv plus meta.json.

use crate::config::{ConfigError, Experiment, ExperimentConfig, ThreadsSpec};
use crate::dataset::{load_binary_design, DatasetError};
use serde::Serialize;
use spectre_core::da_core::{run_chain, DaError, DaModel};
use spectre_core::distributions::{PgSamplerKind, RngStream};
use spectre_core::models::{
    fit_logistic_mle, mixture_kmeans_start, simulate_mixture_data, MixtureModel, MixtureTheta,
    MixtureVariant, ModelError, PswModel, ToyModel,
};
use spectre_core::spectrum::{eigenvalue_trajectory, SpectrumError, TrajectoryRow};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("chain generation failed: {0}")]
    Chain(#[from] DaError),

    #[error("sampling failed: {0}")]
    Sampling(#[from] spectre_core::distributions::DistributionError),

    #[error("spectrum estimation failed: {0}")]
    Spectrum(#[from] SpectrumError),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("thread pool: {0}")]
    Threads(String),
}

impl RunError {
    /// 1 for input problems, 2 for numeric failures mid-run.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Dataset(_) | RunError::Model(_)
            | RunError::Output { .. } | RunError::Threads(_) => 1,
            RunError::Chain(_) | RunError::Sampling(_) | RunError::Spectrum(_) => 2,
        }
    }
}

/// Derived-stream addresses under the master seed. Every consumer of
/// randomness gets its own substream, so thread count and evaluation order
/// cannot change any draw.
mod streams {
    pub const MIXTURE_DATA: u64 = 0;
    pub const CHAIN: u64 = 1;
    pub const TRAJECTORY: u64 = 2;
    pub const MIXTURE_CHAIN_BASE: u64 = 10;
    pub const MIXTURE_TRAJECTORY_BASE: u64 = 20;
    pub const MIXTURE_INIT_BASE: u64 = 30;
}

#[derive(Debug, Serialize)]
struct TimingEntry {
    variant: String,
    m: usize,
    n_mc: usize,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct Metadata {
    experiment: &'static str,
    master_seed: u64,
    threads: usize,
    crate_version: &'static str,
    wall_seconds: f64,
    /// The fully resolved configuration; feeding this TOML back as a config
    /// file reproduces the run.
    config_echo: String,
    model: serde_json::Value,
    timings: Vec<TimingEntry>,
}

pub struct RunSummary {
    pub trajectory_path: PathBuf,
    pub metadata_path: PathBuf,
    pub rows: usize,
    pub wall_seconds: f64,
}

struct VariantRows {
    variant: &'static str,
    rows: Vec<TrajectoryRow>,
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    let started = std::time::Instant::now();
    let threads = resolve_threads(&config.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Threads(e.to_string()))?;
    let (variants, model_meta) = pool.install(|| run_models(config))?;

    std::fs::create_dir_all(out_dir)
        .map_err(|source| RunError::Output { path: out_dir.to_path_buf(), source })?;
    let trajectory_path = out_dir.join("trajectory.csv");
    let mut csv = String::from("experiment,variant,m,N,rank,eigenvalue\n");
    let mut n_rows = 0;
    for v in &variants {
        for row in &v.rows {
            // `{}` on f64 prints the shortest decimal that round-trips
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                config.experiment.name(),
                v.variant,
                row.m,
                row.n_mc,
                row.rank,
                row.eigenvalue
            ));
            n_rows += 1;
        }
    }
    std::fs::write(&trajectory_path, csv)
        .map_err(|source| RunError::Output { path: trajectory_path.clone(), source })?;

    let mut timings = Vec::new();
    for v in &variants {
        for row in &v.rows {
            if row.rank == 0 {
                timings.push(TimingEntry {
                    variant: v.variant.to_string(),
                    m: row.m,
                    n_mc: row.n_mc,
                    seconds: row.wall_seconds,
                });
            }
        }
    }
    let wall_seconds = started.elapsed().as_secs_f64();
    let metadata = Metadata {
        experiment: config.experiment.name(),
        master_seed: config.master_seed,
        threads,
        crate_version: env!("CARGO_PKG_VERSION"),
        wall_seconds,
        config_echo: config.echo_toml(),
        model: model_meta,
        timings,
    };
    let metadata_path = out_dir.join("meta.json");
    let body = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    std::fs::write(&metadata_path, body)
        .map_err(|source| RunError::Output { path: metadata_path.clone(), source })?;

    Ok(RunSummary { trajectory_path, metadata_path, rows: n_rows, wall_seconds })
}

fn resolve_threads(spec: &ThreadsSpec) -> usize {
    match spec {
        ThreadsSpec::Count(n) => *n,
        ThreadsSpec::Auto(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

fn run_models(config: &ExperimentConfig) -> Result<(Vec<VariantRows>, serde_json::Value), RunError> {
    let root = RngStream::root(config.master_seed);
    let schedule = config.schedule.to_schedule()?;
    let burn_in = config.burn_in.expect("defaulted");
    let top_k = config.top_k.expect("defaulted");
    let rescale = config.rescale.expect("defaulted");
    let m_max = *config.m_grid.last().expect("validated nonempty");

    match config.experiment {
        Experiment::Toy => {
            let model = ToyModel;
            let trace = run_chain(&model, 0.0, burn_in, m_max, root.substream(streams::CHAIN))?;
            let rows = eigenvalue_trajectory(
                &model,
                &trace,
                &config.m_grid,
                &schedule,
                rescale,
                top_k,
                root.substream(streams::TRAJECTORY),
            )?;
            let meta = serde_json::json!({ "id": "toy-normal", "x0": 0.0 });
            Ok((vec![VariantRows { variant: "-", rows }], meta))
        }
        Experiment::Psw => {
            let block = config.psw.as_ref().expect("validated");
            let design = load_binary_design(&block.dataset)?;
            let n = design.u.len();
            let p = design.u[0].len();
            let prior_mean = block.prior_mean.expand(p).map_err(RunError::Config)?;
            let prior_cov_rows = block.prior_cov.expand(p).map_err(RunError::Config)?;
            let mut u = ndarray::Array2::<f64>::zeros((n, p));
            for (i, row) in design.u.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    u[[i, j]] = *v;
                }
            }
            let mut prior_cov = ndarray::Array2::<f64>::zeros((p, p));
            for (i, row) in prior_cov_rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    prior_cov[[i, j]] = *v;
                }
            }
            let fit = fit_logistic_mle(u.view(), &design.y)?;
            if !fit.converged {
                eprintln!(
                    "warning: logistic MLE did not converge ({} iterations, gradient norm {:.3e}); \
                     starting from the last iterate",
                    fit.iterations, fit.grad_norm
                );
            }
            let sampler = if block.pg_sampler == "series" {
                PgSamplerKind::SeriesRejection
            } else {
                PgSamplerKind::Exact
            };
            let model = PswModel::new(u, design.y.clone(), prior_mean.clone(), prior_cov.view())?
                .with_pg_sampler(sampler);
            let trace =
                run_chain(&model, fit.beta.clone(), burn_in, m_max, root.substream(streams::CHAIN))?;
            let rows = eigenvalue_trajectory(
                &model,
                &trace,
                &config.m_grid,
                &schedule,
                rescale,
                top_k,
                root.substream(streams::TRAJECTORY),
            )?;
            let meta = serde_json::json!({
                "id": "psw-logistic",
                "dataset": block.dataset,
                "n": n,
                "p": p,
                "predictors": design.predictors,
                "prior_mean": prior_mean,
                "prior_cov": prior_cov_rows,
                "pg_sampler": block.pg_sampler,
                "start_mle": fit.beta,
                "mle_converged": fit.converged,
            });
            Ok((vec![VariantRows { variant: "-", rows }], meta))
        }
        Experiment::Mixture => {
            let block = config.mixture.as_ref().expect("defaulted");
            let truth = MixtureTheta::new(block.mu1, block.mu2, block.p)?;
            let mut data_rng = root.substream(streams::MIXTURE_DATA).rng();
            let y = simulate_mixture_data(&truth, block.tau, block.n, &mut data_rng);
            let theta0 = mixture_kmeans_start(&y)?;
            let mut variants = Vec::new();
            for (v_idx, name) in block.variants.iter().enumerate() {
                let variant = if name == "mda" { MixtureVariant::Mda } else { MixtureVariant::Fs };
                let model = MixtureModel::new(y.clone(), block.tau, variant)?;
                // initial label state drawn from the conditional at theta0
                let latent0 = model.prepare_latent(theta0);
                let mut init_rng =
                    root.substream(streams::MIXTURE_INIT_BASE + v_idx as u64).rng();
                let z0 = model.draw_next_state(&latent0, &mut init_rng)?;
                let trace = run_chain(
                    &model,
                    z0,
                    burn_in,
                    m_max,
                    root.substream(streams::MIXTURE_CHAIN_BASE + v_idx as u64),
                )?;
                let rows = eigenvalue_trajectory(
                    &model,
                    &trace,
                    &config.m_grid,
                    &schedule,
                    rescale,
                    top_k,
                    root.substream(streams::MIXTURE_TRAJECTORY_BASE + v_idx as u64),
                )?;
                let variant: &'static str = if name == "mda" { "mda" } else { "fs" };
                variants.push(VariantRows { variant, rows });
            }
            let meta = serde_json::json!({
                "id": "mixture",
                "n": block.n,
                "tau": block.tau,
                "truth": { "mu1": block.mu1, "mu2": block.mu2, "p": block.p },
                "theta0": { "mu1": theta0.mu1, "mu2": theta0.mu2, "p": theta0.p },
                "simulated_y": y,
                "variants": block.variants,
            });
            Ok((variants, meta))
        }
    }
}
