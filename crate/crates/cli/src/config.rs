//! Experiment configuration: a TOML file with one experiment per run.
//! Unknown keys are rejected, defaults are filled per experiment, and the
//! resolved configuration echoes into the run metadata so a run can be
//! reproduced from its outputs.

use serde::{Deserialize, Serialize};
use spectre_core::spectrum::NSchedule;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Dense-matrix memory bound: an m x m f64 matrix at the cap is ~3.2 GB.
pub const MAX_M: usize = 20_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Toy,
    Psw,
    Mixture,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Toy => "toy",
            Experiment::Psw => "psw",
            Experiment::Mixture => "mixture",
        }
    }
}

/// Schedule spec as written in TOML: a bare string for the named schedules
/// or a one-key table for the parametrized ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Named(String),
    Constant { constant: usize },
    Power { power: f64 },
}

impl ScheduleSpec {
    pub fn to_schedule(&self) -> Result<NSchedule, ConfigError> {
        match self {
            ScheduleSpec::Named(name) => match name.as_str() {
                "strong_default" => Ok(NSchedule::StrongDefault),
                "weak_log" => Ok(NSchedule::WeakLog),
                other => Err(ConfigError::Invalid {
                    field: "schedule",
                    message: format!(
                        "unknown schedule `{other}`; use \"strong_default\", \"weak_log\", \
                         {{ constant = N }}, or {{ power = alpha }}"
                    ),
                }),
            },
            ScheduleSpec::Constant { constant } => {
                if *constant == 0 {
                    return Err(ConfigError::Invalid {
                        field: "schedule",
                        message: "constant schedule must be at least 1".into(),
                    });
                }
                Ok(NSchedule::Constant(*constant))
            }
            ScheduleSpec::Power { power } => {
                if !(power.is_finite() && *power > 0.0) {
                    return Err(ConfigError::Invalid {
                        field: "schedule",
                        message: format!("power exponent must be positive and finite, got {power}"),
                    });
                }
                Ok(NSchedule::Power(*power))
            }
        }
    }
}

/// Scalar, diagonal, or full matrix: the three accepted shapes for the
/// prior covariance (and scalar/vector for the prior mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PswBlock {
    pub dataset: PathBuf,
    #[serde(default = "VectorSpec::zero")]
    pub prior_mean: VectorSpec,
    #[serde(default = "MatrixSpec::identity")]
    pub prior_cov: MatrixSpec,
    #[serde(default = "default_pg_sampler")]
    pub pg_sampler: String,
}

impl VectorSpec {
    fn zero() -> Self {
        VectorSpec::Scalar(0.0)
    }

    pub fn expand(&self, p: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            VectorSpec::Scalar(v) => Ok(vec![*v; p]),
            VectorSpec::Vector(v) if v.len() == p => Ok(v.clone()),
            VectorSpec::Vector(v) => Err(ConfigError::Invalid {
                field: "psw.prior_mean",
                message: format!("expected length {p}, got {}", v.len()),
            }),
        }
    }
}

impl MatrixSpec {
    fn identity() -> Self {
        MatrixSpec::Scalar(1.0)
    }

    pub fn expand(&self, p: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        let diag = |d: &[f64]| -> Vec<Vec<f64>> {
            (0..p)
                .map(|i| (0..p).map(|j| if i == j { d[i] } else { 0.0 }).collect())
                .collect()
        };
        match self {
            MatrixSpec::Scalar(s) => Ok(diag(&vec![*s; p])),
            MatrixSpec::Diagonal(d) if d.len() == p => Ok(diag(d)),
            MatrixSpec::Full(rows) if rows.len() == p && rows.iter().all(|r| r.len() == p) => {
                Ok(rows.clone())
            }
            _ => Err(ConfigError::Invalid {
                field: "psw.prior_cov",
                message: format!("expected a scalar, a length-{p} diagonal, or a {p}x{p} matrix"),
            }),
        }
    }
}

fn default_pg_sampler() -> String {
    "exact".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureBlock {
    #[serde(default = "default_mixture_n")]
    pub n: usize,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default = "default_mu2")]
    pub mu2: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
}

impl Default for MixtureBlock {
    fn default() -> Self {
        Self {
            n: default_mixture_n(),
            mu1: 0.0,
            mu2: default_mu2(),
            p: default_p(),
            tau: default_tau(),
            variants: default_variants(),
        }
    }
}

fn default_mixture_n() -> usize {
    20
}

fn default_mu2() -> f64 {
    0.1
}

fn default_p() -> f64 {
    0.5
}

fn default_tau() -> f64 {
    0.1
}

fn default_variants() -> Vec<String> {
    vec!["mda".into(), "fs".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThreadsSpec {
    Auto(String),
    Count(usize),
}

impl Default for ThreadsSpec {
    fn default() -> Self {
        ThreadsSpec::Auto("auto".into())
    }
}

/// The raw deserialized config; [`ExperimentConfig::load`] validates and
/// fills defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub m_grid: Vec<usize>,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub rescale: Option<bool>,
    #[serde(default)]
    pub threads: ThreadsSpec,
    #[serde(default)]
    pub psw: Option<PswBlock>,
    #[serde(default)]
    pub mixture: Option<MixtureBlock>,
}

fn default_schedule() -> ScheduleSpec {
    ScheduleSpec::Named("strong_default".into())
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config: ExperimentConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    #[cfg(test)]
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse {
                path: PathBuf::from("<inline>"),
                message: e.to_string(),
            })?;
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    /// Desk-scale burn-in defaults (full-scale 10^6 values are one config
    /// line away) and the per-experiment reporting depths.
    fn fill_defaults(&mut self) {
        if self.burn_in.is_none() {
            self.burn_in = Some(match self.experiment {
                Experiment::Toy | Experiment::Mixture => 100_000,
                Experiment::Psw => 10_000,
            });
        }
        if self.top_k.is_none() {
            self.top_k = Some(match self.experiment {
                Experiment::Toy => 11,
                Experiment::Psw => 30,
                Experiment::Mixture => 21,
            });
        }
        if self.rescale.is_none() {
            self.rescale = Some(true);
        }
        if self.experiment == Experiment::Mixture && self.mixture.is_none() {
            self.mixture = Some(MixtureBlock::default());
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &'static str, message: String| ConfigError::Invalid { field, message };
        if self.m_grid.is_empty() {
            return Err(invalid("m_grid", "must be nonempty".into()));
        }
        if self.m_grid[0] < 2 {
            return Err(invalid("m_grid", "entries must be at least 2".into()));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("m_grid", "must be strictly increasing".into()));
        }
        let m_max = *self.m_grid.last().expect("nonempty");
        if m_max > MAX_M {
            return Err(invalid(
                "m_grid",
                format!("max m = {m_max} exceeds the dense-matrix bound {MAX_M}"),
            ));
        }
        let top_k = self.top_k.expect("defaulted");
        if top_k == 0 || top_k > self.m_grid[0] {
            return Err(invalid(
                "top_k",
                format!("must be in 1..={} (the smallest grid entry)", self.m_grid[0]),
            ));
        }
        self.schedule.to_schedule()?;
        if let ThreadsSpec::Auto(word) = &self.threads {
            if word != "auto" {
                return Err(invalid("threads", format!("expected \"auto\" or a count, got `{word}`")));
            }
        }
        if let ThreadsSpec::Count(0) = self.threads {
            return Err(invalid("threads", "thread count must be at least 1".into()));
        }
        match self.experiment {
            Experiment::Toy => {}
            Experiment::Psw => {
                if self.psw.is_none() {
                    return Err(invalid(
                        "psw.dataset",
                        "the psw experiment requires a [psw] block with a dataset path".into(),
                    ));
                }
                if self.rescale == Some(false) {
                    return Err(invalid(
                        "rescale",
                        "the psw posterior is unnormalized; rescaling is mandatory".into(),
                    ));
                }
                let block = self.psw.as_ref().expect("checked above");
                if block.pg_sampler != "exact" && block.pg_sampler != "series" {
                    return Err(invalid(
                        "psw.pg_sampler",
                        format!("expected \"exact\" or \"series\", got `{}`", block.pg_sampler),
                    ));
                }
            }
            Experiment::Mixture => {
                if self.rescale == Some(false) {
                    return Err(invalid(
                        "rescale",
                        "the mixture stationary mass is unnormalized; rescaling is mandatory"
                            .into(),
                    ));
                }
                let block = self.mixture.as_ref().expect("defaulted");
                if block.n < 2 {
                    return Err(invalid("mixture.n", "need at least 2 observations".into()));
                }
                if !(block.tau > 0.0 && block.tau.is_finite()) {
                    return Err(invalid("mixture.tau", format!("must be positive, got {}", block.tau)));
                }
                if !(block.p > 0.0 && block.p < 1.0) {
                    return Err(invalid("mixture.p", format!("must be in (0,1), got {}", block.p)));
                }
                if block.variants.is_empty() {
                    return Err(invalid("mixture.variants", "need at least one variant".into()));
                }
                for v in &block.variants {
                    if v != "mda" && v != "fs" {
                        return Err(invalid(
                            "mixture.variants",
                            format!("expected \"mda\" or \"fs\", got `{v}`"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// The fully resolved config as TOML, for the metadata echo.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(self).expect("resolved config serializes")
    }
}
