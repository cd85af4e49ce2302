//! Concrete DA models: the normal-normal toy chain, the Polya-Gamma
//! logistic regression Gibbs sampler, and the two component normal mixture
//! latent-label samplers (plain DA and label-switching sandwich).

pub mod mixture;
pub mod psw;
pub mod toy;

pub use mixture::{
    mixture_kmeans_start, simulate_mixture_data, MixtureLatent, MixtureModel, MixtureTheta,
    MixtureVariant,
};
pub use psw::{fit_logistic_mle, LogisticFit, PswLatent, PswModel};
pub use toy::ToyModel;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model specification: {0}")]
    Invalid(String),

    #[error(transparent)]
    Distribution(#[from] crate::distributions::DistributionError),
}

/// Log density of `N(mean, var)` at `x`.
#[inline]
pub(crate) fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var)
}
