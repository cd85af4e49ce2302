//! Sampling and density primitives: seeded RNG streams, normal and
//! multivariate normal, beta, categorical, and the Polya-Gamma PG(1, c)
//! family.

mod polya_gamma;

pub use polya_gamma::{
    pg1_cdf, pg1_log_density, sample_pg1, sample_pg1_series, sample_pg1_with, PgSamplerKind,
    PolyaGammaParams,
};

use crate::linalg;
use ndarray::ArrayView2;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::{Beta as BetaDist, Distribution, StandardNormal};
use thiserror::Error;

/// The concrete generator behind every sampler in this crate. ChaCha8 is
/// seedable from a single `u64`, fast, and produces identical streams on
/// every platform and thread layout.
pub type StreamRng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("categorical weights must be nonnegative with a positive finite sum")]
    InvalidWeights,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. This is the fixed 64-bit mix used to derive child
/// seeds; see [`RngStream`].
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible, thread-count-independent random stream address.
///
/// A stream is the pair `(master_seed, stream_index)`. Its generator is
/// ChaCha8 seeded with
///
/// ```text
/// splitmix64(master_seed ^ splitmix64(stream_index))
/// ```
///
/// so equal pairs always produce identical sequences, and distinct indices
/// under one master seed give statistically independent streams. Parallel
/// code derives one stream per unit of work (for example one per matrix
/// row) instead of sharing a generator, which keeps results bit-identical
/// for every thread count.
///
/// [`RngStream::substream`] re-keys: the child's master seed is the parent's
/// derived seed, so `(path of indices)` addresses a tree of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Stream 0 of a master seed.
    pub fn root(master_seed: u64) -> Self {
        Self::new(master_seed, 0)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// The seed this stream hands to its generator.
    pub fn derived_seed(&self) -> u64 {
        splitmix64(self.master_seed ^ splitmix64(self.stream_index))
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.derived_seed())
    }

    /// Child stream `index` under this stream.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(self.derived_seed(), index)
    }
}

/// One draw from `N_p(mean, covariance)` via a fresh Cholesky factorization
/// of the covariance.
pub fn sample_mvn(
    mean: &[f64],
    covariance: ArrayView2<'_, f64>,
    rng: &mut StreamRng,
) -> Result<Vec<f64>, DistributionError> {
    let p = mean.len();
    if covariance.dim() != (p, p) {
        return Err(DistributionError::DimensionMismatch(format!(
            "mean has length {p} but covariance is {:?}",
            covariance.dim()
        )));
    }
    let cov: Vec<f64> = covariance.iter().copied().collect();
    let l = linalg::cholesky_lower(&cov, p).ok_or(DistributionError::NotPositiveDefinite)?;
    let z: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut x = mean.to_vec();
    for i in 0..p {
        for k in 0..=i {
            x[i] += l[i * p + k] * z[k];
        }
    }
    Ok(x)
}

/// Log density of `N_p(mean, precision^-1)` at `x`, given the precision
/// matrix and its log determinant:
///
/// `-(p/2) log 2pi + (1/2) log det(precision) - (1/2) (x-mean)^T precision (x-mean)`
pub fn mvn_log_density(
    x: &[f64],
    mean: &[f64],
    precision: ArrayView2<'_, f64>,
    log_det_precision: f64,
) -> Result<f64, DistributionError> {
    let p = x.len();
    if mean.len() != p || precision.dim() != (p, p) {
        return Err(DistributionError::DimensionMismatch(format!(
            "x has length {p}, mean has length {}, precision is {:?}",
            mean.len(),
            precision.dim()
        )));
    }
    let mut quad = 0.0;
    for i in 0..p {
        let di = x[i] - mean[i];
        for j in 0..p {
            quad += di * precision[[i, j]] * (x[j] - mean[j]);
        }
    }
    Ok(-0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det_precision - 0.5 * quad)
}

/// One draw from Beta(a, b).
pub fn sample_beta(a: f64, b: f64, rng: &mut StreamRng) -> Result<f64, DistributionError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(DistributionError::InvalidParameter { name: "a", value: a });
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(DistributionError::InvalidParameter { name: "b", value: b });
    }
    let dist = BetaDist::new(a, b).expect("parameters validated above");
    Ok(dist.sample(rng))
}

/// One categorical draw over `0..weights.len()`, with probabilities
/// proportional to the weights.
pub fn sample_categorical(weights: &[f64], rng: &mut StreamRng) -> Result<usize, DistributionError> {
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(DistributionError::InvalidWeights);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(DistributionError::InvalidWeights);
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(weights.len() - 1)
}

/// `log(exp(a) + exp(b))` without overflow.
pub(crate) fn logsumexp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}
