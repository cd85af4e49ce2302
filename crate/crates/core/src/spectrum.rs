//! The random matrix spectrum estimators: exact kernel entries (ERMA),
//! Monte Carlo entries (MCRMA), and Monte Carlo entries over an
//! unnormalized stationary density with rescaling. Also the `N(m)`
//! schedules and eigenvalue-trajectory sweeps over a grid of `m` values.

use crate::da_core::{estimate_kernel_log_row, ChainTrace, DaError, DaModel};
use crate::distributions::RngStream;
use crate::numerics::{self, NumericsError};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("model `{0}` provides no closed-form transition density")]
    MissingExactKernel(String),

    #[error("model `{0}` has an unnormalized stationary density; use the rescaling estimator")]
    ModelNotNormalized(String),

    #[error("row {row} (N = {n_mc}) failed: {source}")]
    Row {
        row: usize,
        n_mc: usize,
        source: DaError,
    },

    #[error("non-finite matrix entry at [{row}, {col}]; the stationary density underflowed there")]
    NonFiniteEntry { row: usize, col: usize },

    #[error(transparent)]
    Numerics(#[from] NumericsError),

    #[error("largest eigenvalue {0} is not positive; m is too small or the model is broken")]
    DegenerateSpectrum(f64),

    #[error("trace has {len} states but the grid requires {needed}")]
    TraceTooShort { needed: usize, len: usize },

    #[error("m grid must be strictly increasing with every entry >= 2")]
    BadGrid,

    #[error("top_k = {top_k} exceeds the smallest grid entry {m_min}")]
    TopKTooLarge { top_k: usize, m_min: usize },

    #[error("top_k must be positive")]
    ZeroTopK,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Monte Carlo batch-size schedules `N(m)`.
///
/// `StrongDefault` is `ceil(m^(1 + 1e-6))`, which makes `sum 1/N(m)` finite
/// and therefore gives almost-sure convergence of the spectrum estimates;
/// `WeakLog` is `max(ceil(log m), 1)`, enough for convergence in
/// probability; `Constant` and `Power` are for experiments that pin or
/// sweep the batch size by hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NSchedule {
    StrongDefault,
    WeakLog,
    Constant(usize),
    Power(f64),
}

/// Evaluates a schedule at chain length `m >= 1`.
pub fn n_schedule(schedule: &NSchedule, m: usize) -> Result<usize, SpectrumError> {
    if m == 0 {
        return Err(SpectrumError::InvalidSchedule("m must be >= 1".into()));
    }
    let to_count = |v: f64, what: &str| -> Result<usize, SpectrumError> {
        if !v.is_finite() || v < 1.0 || v > u64::MAX as f64 {
            return Err(SpectrumError::InvalidSchedule(format!(
                "{what} evaluates to {v} at m = {m}"
            )));
        }
        Ok(v as usize)
    };
    match schedule {
        NSchedule::StrongDefault => to_count((m as f64).powf(1.0 + 1e-6).ceil(), "m^(1+1e-6)"),
        NSchedule::WeakLog => Ok(((m as f64).ln().ceil() as usize).max(1)),
        NSchedule::Constant(k) => {
            if *k == 0 {
                return Err(SpectrumError::InvalidSchedule("constant schedule must be >= 1".into()));
            }
            Ok(*k)
        }
        NSchedule::Power(alpha) => {
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(SpectrumError::InvalidSchedule(format!(
                    "power exponent must be positive and finite, got {alpha}"
                )));
            }
            to_count((m as f64).powf(*alpha).ceil(), "m^alpha")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Exact,
    MonteCarlo,
    MonteCarloUnnormalized,
}

/// The `m x m` approximation matrix: symmetric, zero diagonal, nonnegative
/// finite entries.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    entries: Array2<f64>,
    kind: KernelKind,
    n_mc: usize,
}

impl KernelMatrix {
    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Monte Carlo batch size behind each entry; 0 for the exact kernel.
    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Checks the construction invariants. Used by tests; construction
    /// itself guarantees them.
    pub fn check_invariants(&self) -> Result<(), SpectrumError> {
        let m = self.m();
        for j in 0..m {
            if self.entries[[j, j]] != 0.0 {
                return Err(SpectrumError::NonFiniteEntry { row: j, col: j });
            }
            for jp in 0..m {
                let v = self.entries[[j, jp]];
                if !v.is_finite() || v < 0.0 || v != self.entries[[jp, j]] {
                    return Err(SpectrumError::NonFiniteEntry { row: j, col: jp });
                }
            }
        }
        Ok(())
    }
}

/// Exact random matrix approximation: entries
/// `k(X_j, X_j') / (m pi(X_j'))` off the diagonal, then symmetrized as
/// `(A + A^T)/2`. Requires a closed-form transition density and a
/// normalized stationary density.
pub fn build_erma_matrix<M: DaModel>(
    trace: &ChainTrace<M::State>,
    model: &M,
) -> Result<KernelMatrix, SpectrumError> {
    let states = trace.states();
    let m = states.len();
    if !model.is_normalized() {
        return Err(SpectrumError::ModelNotNormalized(model.model_id().to_string()));
    }
    if model.exact_log_kernel(&states[0], &states[0]).is_none() {
        return Err(SpectrumError::MissingExactKernel(model.model_id().to_string()));
    }
    let log_pi: Vec<f64> = states.iter().map(|x| model.stationary_log_unnormalized(x)).collect();
    let inv_m = 1.0 / m as f64;
    let mut entries = Array2::<f64>::zeros((m, m));
    entries
        .as_slice_mut()
        .expect("freshly allocated matrix is contiguous")
        .par_chunks_mut(m)
        .enumerate()
        .try_for_each(|(j, row)| -> Result<(), SpectrumError> {
            for jp in 0..m {
                if jp == j {
                    continue;
                }
                let lk = model
                    .exact_log_kernel(&states[j], &states[jp])
                    .ok_or_else(|| SpectrumError::MissingExactKernel(model.model_id().into()))?;
                let v = inv_m * (lk - log_pi[jp]).exp();
                if !v.is_finite() {
                    return Err(SpectrumError::NonFiniteEntry { row: j, col: jp });
                }
                row[jp] = v;
            }
            Ok(())
        })?;
    for j in 0..m {
        for jp in 0..j {
            let avg = 0.5 * (entries[[j, jp]] + entries[[jp, j]]);
            entries[[j, jp]] = avg;
            entries[[jp, j]] = avg;
        }
    }
    Ok(KernelMatrix { entries, kind: KernelKind::Exact, n_mc: 0 })
}

/// Monte Carlo random matrix approximation with a normalized stationary
/// density: for `j < j'` the entry is
/// `exp(log k_hat(X_j, X_j') - log pi(X_j')) / m`, where `k_hat` averages
/// `N` latent draws shared across the whole row; the lower triangle mirrors
/// the upper and the diagonal is zero.
///
/// Rows are built in parallel, one derived random stream per row, so the
/// result is bit-identical for every thread count.
pub fn build_mcrma_matrix<M: DaModel>(
    trace: &ChainTrace<M::State>,
    model: &M,
    n_mc: usize,
    stream: RngStream,
) -> Result<KernelMatrix, SpectrumError> {
    if !model.is_normalized() {
        return Err(SpectrumError::ModelNotNormalized(model.model_id().to_string()));
    }
    build_mc_entries(trace, model, n_mc, stream, KernelKind::MonteCarlo)
}

/// Monte Carlo approximation against an unnormalized stationary density
/// `eta`: identical to [`build_mcrma_matrix`] with `eta` in place of `pi`.
/// The spectrum of the result estimates `sp(K)` only up to the unknown
/// constant, which [`spectrum_estimate`] removes by rescaling.
pub fn build_mcrma_unnormalized_matrix<M: DaModel>(
    trace: &ChainTrace<M::State>,
    model: &M,
    n_mc: usize,
    stream: RngStream,
) -> Result<KernelMatrix, SpectrumError> {
    build_mc_entries(trace, model, n_mc, stream, KernelKind::MonteCarloUnnormalized)
}

fn build_mc_entries<M: DaModel>(
    trace: &ChainTrace<M::State>,
    model: &M,
    n_mc: usize,
    stream: RngStream,
    kind: KernelKind,
) -> Result<KernelMatrix, SpectrumError> {
    let states = trace.states();
    let m = states.len();
    let log_eta: Vec<f64> = states.iter().map(|x| model.stationary_log_unnormalized(x)).collect();
    let inv_m = 1.0 / m as f64;
    let mut entries = Array2::<f64>::zeros((m, m));
    entries
        .as_slice_mut()
        .expect("freshly allocated matrix is contiguous")
        .par_chunks_mut(m)
        .enumerate()
        .try_for_each(|(j, row)| -> Result<(), SpectrumError> {
            // the last row has no upper-triangle entries; mirroring fills it
            if j + 1 >= m {
                return Ok(());
            }
            let mut rng = stream.substream(j as u64).rng();
            let logs = estimate_kernel_log_row(model, &states[j], &states[j + 1..], n_mc, &mut rng)
                .map_err(|source| SpectrumError::Row { row: j, n_mc, source })?;
            for (offset, lk) in logs.iter().enumerate() {
                let jp = j + 1 + offset;
                let v = inv_m * (lk - log_eta[jp]).exp();
                if !v.is_finite() {
                    return Err(SpectrumError::NonFiniteEntry { row: j, col: jp });
                }
                row[jp] = v;
            }
            Ok(())
        })?;
    for j in 1..m {
        for jp in 0..j {
            entries[[j, jp]] = entries[[jp, j]];
        }
    }
    Ok(KernelMatrix { entries, kind, n_mc })
}

/// A descending eigenvalue estimate of the operator spectrum.
///
/// The full `m`-point spectrum is retained (the zero-diagonal construction
/// forces the eigenvalues to sum to zero, so the tail carries structurally
/// negative values that are reported as-is, never clamped); `top()` is the
/// reporting slice.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    eigenvalues: Vec<f64>,
    m: usize,
    n_mc: usize,
    rescaled: bool,
    top_k: usize,
}

impl SpectrumEstimate {
    /// All `m` eigenvalues, descending (rescaled if requested).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The reporting slice: the `top_k` largest eigenvalues.
    pub fn top(&self) -> &[f64] {
        &self.eigenvalues[..self.top_k.min(self.eigenvalues.len())]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    pub fn rescaled(&self) -> bool {
        self.rescaled
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }
}

/// Eigendecomposes a kernel matrix into a spectrum estimate.
///
/// With `rescale` set, every eigenvalue is divided by the largest, so the
/// leading reported value is exactly 1; this is the step that cancels the
/// unknown normalizing constant of an unnormalized stationary density. A
/// largest eigenvalue that is not strictly positive makes rescaling
/// meaningless and is reported as an error.
pub fn spectrum_estimate(
    matrix: &KernelMatrix,
    rescale: bool,
    top_k: usize,
) -> Result<SpectrumEstimate, SpectrumError> {
    if top_k == 0 {
        return Err(SpectrumError::ZeroTopK);
    }
    let spectrum = numerics::symmetric_eigenvalues(matrix.entries())?;
    let mut eigenvalues = spectrum.values().to_vec();
    debug_assert!(
        eigenvalues.iter().sum::<f64>().abs()
            <= 1e-8 * matrix.m() as f64 * matrix.max_abs_entry().max(f64::MIN_POSITIVE),
        "zero-diagonal matrix must have (numerically) zero eigenvalue sum"
    );
    if rescale {
        let lambda_max = eigenvalues[0];
        if lambda_max <= 0.0 {
            return Err(SpectrumError::DegenerateSpectrum(lambda_max));
        }
        for v in &mut eigenvalues {
            *v /= lambda_max;
        }
    }
    Ok(SpectrumEstimate {
        m: matrix.m(),
        n_mc: matrix.n_mc(),
        rescaled: rescale,
        top_k: top_k.min(eigenvalues.len()),
        eigenvalues,
    })
}

/// One reported eigenvalue of one trajectory point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub m: usize,
    pub n_mc: usize,
    /// 0-based rank; rank 0 is the largest eigenvalue.
    pub rank: usize,
    pub eigenvalue: f64,
    /// Wall time of the matrix build + eigendecomposition for this `m`.
    pub wall_seconds: f64,
}

/// Runs the Monte Carlo estimator on nested prefixes of one trace.
///
/// For each `m` in the grid the matrix is built on the first `m` states
/// with `N = n_schedule(m)` fresh latent batches, then eigendecomposed;
/// the `top_k` (rescaled) eigenvalues are emitted as rows keyed by `m` and
/// rank. With `rescale` unset the model must be normalized and the plain
/// MCRMA estimator runs instead of the rescaling one.
pub fn eigenvalue_trajectory<M: DaModel>(
    model: &M,
    trace: &ChainTrace<M::State>,
    m_grid: &[usize],
    schedule: &NSchedule,
    rescale: bool,
    top_k: usize,
    stream: RngStream,
) -> Result<Vec<TrajectoryRow>, SpectrumError> {
    if top_k == 0 {
        return Err(SpectrumError::ZeroTopK);
    }
    if m_grid.is_empty() || m_grid[0] < 2 || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpectrumError::BadGrid);
    }
    let m_max = *m_grid.last().expect("grid not empty");
    if m_max > trace.len() {
        return Err(SpectrumError::TraceTooShort { needed: m_max, len: trace.len() });
    }
    if top_k > m_grid[0] {
        return Err(SpectrumError::TopKTooLarge { top_k, m_min: m_grid[0] });
    }
    let mut rows = Vec::with_capacity(m_grid.len() * top_k);
    for &m in m_grid {
        let started = std::time::Instant::now();
        let n_mc = n_schedule(schedule, m)?;
        let prefix = trace.prefix(m);
        let matrix_stream = stream.substream(m as u64);
        let matrix = if rescale {
            build_mcrma_unnormalized_matrix(&prefix, model, n_mc, matrix_stream)?
        } else {
            build_mcrma_matrix(&prefix, model, n_mc, matrix_stream)?
        };
        let estimate = spectrum_estimate(&matrix, rescale, top_k)?;
        let wall_seconds = started.elapsed().as_secs_f64();
        for (rank, &eigenvalue) in estimate.top().iter().enumerate() {
            rows.push(TrajectoryRow { m, n_mc, rank, eigenvalue, wall_seconds });
        }
    }
    Ok(rows)
}
