//! The DA-model contract, chain simulation, and Monte Carlo estimation of
//! transition-density rows.

use crate::distributions::StreamRng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DaError {
    #[error("latent draw failed at chain iteration {iteration}: {source}")]
    LatentDraw {
        iteration: usize,
        source: crate::distributions::DistributionError,
    },

    #[error("state draw failed at chain iteration {iteration}: {source}")]
    StateDraw {
        iteration: usize,
        source: crate::distributions::DistributionError,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("chain length m must be at least 2, got {0}")]
    ChainTooShort(usize),

    #[error("Monte Carlo size N must be at least 1")]
    ZeroMonteCarloSize,
}

/// A data augmentation model: a two-block Gibbs sampler whose state chain
/// transitions by drawing a latent `z ~ f_{Z|X}(.|x)` and then
/// `x' ~ f_{X|Z}(.|z)`, so the transition density is the integral of
/// `f_{X|Z}(x'|z) f_{Z|X}(z|x)` over the latent space.
///
/// `Latent` is whatever the model wants to carry between the draw and the
/// density evaluations; implementations cache per-latent factorizations
/// there, since one drawn latent is evaluated against many target states.
pub trait DaModel: Sync {
    type State: Clone + Send + Sync;
    type Latent: Send + Sync;

    /// Stable identifier used in trace provenance and output metadata.
    fn model_id(&self) -> &str;

    /// Draws `z ~ f_{Z|X}(.|x)`.
    fn draw_latent(
        &self,
        x: &Self::State,
        rng: &mut StreamRng,
    ) -> Result<Self::Latent, crate::distributions::DistributionError>;

    /// `log f_{X|Z}(x_next | z)`. Finite or negative infinity, never NaN or
    /// positive infinity.
    fn latent_conditional_log_density(&self, x_next: &Self::State, z: &Self::Latent) -> f64;

    /// Draws `x ~ f_{X|Z}(.|z)`.
    fn draw_next_state(
        &self,
        z: &Self::Latent,
        rng: &mut StreamRng,
    ) -> Result<Self::State, crate::distributions::DistributionError>;

    /// `log eta(x)` where the stationary density is `pi = eta / c` for some
    /// (possibly unknown) constant `c`.
    fn stationary_log_unnormalized(&self, x: &Self::State) -> f64;

    /// True when `eta` integrates to one, i.e. `stationary_log_unnormalized`
    /// is the actual log stationary density.
    fn is_normalized(&self) -> bool;

    /// `log k(x, x_next)` when the transition density has a closed form.
    fn exact_log_kernel(&self, _x: &Self::State, _x_next: &Self::State) -> Option<f64> {
        None
    }
}

/// `m` consecutive realizations of a DA chain, plus the provenance needed
/// to regenerate them.
#[derive(Debug, Clone)]
pub struct ChainTrace<S> {
    states: Vec<S>,
    burn_in: usize,
    master_seed: u64,
    model_id: String,
}

impl<S> ChainTrace<S> {
    /// Assembles a trace from explicit states. [`run_chain`] is the normal
    /// constructor; this one serves worked examples and callers that manage
    /// their own chains.
    pub fn from_states(states: Vec<S>, burn_in: usize, master_seed: u64, model_id: &str) -> Self {
        Self { states, burn_in, master_seed, model_id: model_id.to_string() }
    }

    /// The first `m` states as a trace with the same provenance. Estimator
    /// sweeps reuse one long trace through its prefixes rather than
    /// regenerating chains per grid point.
    pub fn prefix(&self, m: usize) -> ChainTrace<S>
    where
        S: Clone,
    {
        assert!(m <= self.len(), "prefix longer than trace");
        Self {
            states: self.states[..m].to_vec(),
            burn_in: self.burn_in,
            master_seed: self.master_seed,
            model_id: self.model_id.clone(),
        }
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }
}

/// Runs the DA chain from `x0`, discarding `burn_in` transitions and then
/// recording `m` states. The first retained state is the post-burn-in
/// current state, so `burn_in = 0` keeps `x0` as `states[0]`.
pub fn run_chain<M: DaModel>(
    model: &M,
    x0: M::State,
    burn_in: usize,
    m: usize,
    stream: crate::distributions::RngStream,
) -> Result<ChainTrace<M::State>, DaError> {
    if m < 2 {
        return Err(DaError::ChainTooShort(m));
    }
    let mut rng = stream.rng();
    let mut state = x0;
    let step = |state: &M::State, rng: &mut StreamRng, iteration: usize| -> Result<M::State, DaError> {
        let z = model
            .draw_latent(state, rng)
            .map_err(|source| DaError::LatentDraw { iteration, source })?;
        model
            .draw_next_state(&z, rng)
            .map_err(|source| DaError::StateDraw { iteration, source })
    };
    for it in 0..burn_in {
        state = step(&state, &mut rng, it)?;
    }
    let mut states = Vec::with_capacity(m);
    states.push(state.clone());
    for i in 1..m {
        state = step(&state, &mut rng, burn_in + i - 1)?;
        states.push(state.clone());
    }
    Ok(ChainTrace {
        states,
        burn_in,
        master_seed: stream.derived_seed(),
        model_id: model.model_id().to_string(),
    })
}

/// Monte Carlo estimate of one row of the transition-density matrix, in log
/// space: draws `N` latents from `f_{Z|X}(.|x_j)` once, then for every
/// target `x_j'` returns
///
/// `log[(1/N) sum_l f_{X|Z}(x_j' | Z_l)]`
///
/// by log-sum-exp over the shared latent batch. A target whose every
/// summand underflows to zero yields negative infinity (an estimated kernel
/// value of zero), not an error.
pub fn estimate_kernel_log_row<M: DaModel>(
    model: &M,
    x_j: &M::State,
    targets: &[M::State],
    n_mc: usize,
    rng: &mut StreamRng,
) -> Result<Vec<f64>, DaError> {
    if n_mc == 0 {
        return Err(DaError::ZeroMonteCarloSize);
    }
    let mut latents = Vec::with_capacity(n_mc);
    for l in 0..n_mc {
        latents.push(
            model
                .draw_latent(x_j, rng)
                .map_err(|source| DaError::LatentDraw { iteration: l, source })?,
        );
    }
    let ln_n = (n_mc as f64).ln();
    let mut buf = vec![0.0f64; n_mc];
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let mut max = f64::NEG_INFINITY;
        for (slot, z) in buf.iter_mut().zip(&latents) {
            let v = model.latent_conditional_log_density(target, z);
            debug_assert!(!v.is_nan() && v != f64::INFINITY);
            *slot = v;
            if v > max {
                max = v;
            }
        }
        if max == f64::NEG_INFINITY {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        let mut sum = 0.0;
        for v in &buf {
            let d = v - max;
            // terms this far below the maximum cannot move an f64 sum
            if d > -745.0 {
                sum += d.exp();
            }
        }
        out.push(max + sum.ln() - ln_n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DistributionError, RngStream};
    use rand_distr::{Distribution, StandardNormal};

    /// Minimal normal-normal DA chain used to exercise the generic
    /// machinery without pulling in the models module.
    struct NormalPair;

    impl DaModel for NormalPair {
        type State = f64;
        type Latent = f64;

        fn model_id(&self) -> &str {
            "normal-pair"
        }

        fn draw_latent(&self, x: &f64, rng: &mut StreamRng) -> Result<f64, DistributionError> {
            let z: f64 = StandardNormal.sample(rng);
            Ok(0.5 * x + z * 0.125f64.sqrt())
        }

        fn latent_conditional_log_density(&self, x_next: &f64, z: &f64) -> f64 {
            let var = 0.25;
            -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x_next - z).powi(2) / (2.0 * var)
        }

        fn draw_next_state(&self, z: &f64, rng: &mut StreamRng) -> Result<f64, DistributionError> {
            let e: f64 = StandardNormal.sample(rng);
            Ok(z + 0.5 * e)
        }

        fn stationary_log_unnormalized(&self, x: &f64) -> f64 {
            let var = 0.25;
            -0.5 * (2.0 * std::f64::consts::PI * var).ln() - x * x / (2.0 * var)
        }

        fn is_normalized(&self) -> bool {
            true
        }
    }

    #[test]
    fn chain_is_reproducible() {
        let s = RngStream::root(77).substream(1);
        let a = run_chain(&NormalPair, 0.0, 0, 3, s).unwrap();
        let b = run_chain(&NormalPair, 0.0, 0, 3, s).unwrap();
        assert_eq!(a.states(), b.states());
        assert_eq!(a.states().len(), 3);
        assert_eq!(a.states()[0], 0.0); // burn_in = 0 keeps x0
        assert_eq!(a.model_id(), "normal-pair");
    }

    #[test]
    fn chain_rejects_m_below_two() {
        assert!(matches!(
            run_chain(&NormalPair, 0.0, 0, 1, RngStream::root(0)),
            Err(DaError::ChainTooShort(1))
        ));
    }

    #[test]
    fn burn_in_advances_start() {
        let s = RngStream::root(78);
        let long = run_chain(&NormalPair, 0.0, 0, 12, s).unwrap();
        let burned = run_chain(&NormalPair, 0.0, 5, 7, s).unwrap();
        assert_eq!(&long.states()[5..], burned.states());
    }

    #[test]
    fn single_sample_row_is_one_latent_density() {
        let s = RngStream::root(80);
        let mut rng_row = s.rng();
        let row =
            estimate_kernel_log_row(&NormalPair, &0.4, &[0.2, -0.1], 1, &mut rng_row).unwrap();
        let mut rng_check = s.rng();
        let z = NormalPair.draw_latent(&0.4, &mut rng_check).unwrap();
        assert_eq!(row[0], NormalPair.latent_conditional_log_density(&0.2, &z));
        assert_eq!(row[1], NormalPair.latent_conditional_log_density(&-0.1, &z));
    }

    #[test]
    fn rejects_zero_monte_carlo_size() {
        let mut rng = RngStream::root(81).rng();
        assert!(matches!(
            estimate_kernel_log_row(&NormalPair, &0.0, &[0.0], 0, &mut rng),
            Err(DaError::ZeroMonteCarloSize)
        ));
    }

    struct AllUnderflow;

    impl DaModel for AllUnderflow {
        type State = f64;
        type Latent = f64;

        fn model_id(&self) -> &str {
            "underflow"
        }

        fn draw_latent(&self, _: &f64, _: &mut StreamRng) -> Result<f64, DistributionError> {
            Ok(0.0)
        }

        fn latent_conditional_log_density(&self, _: &f64, _: &f64) -> f64 {
            f64::NEG_INFINITY
        }

        fn draw_next_state(&self, _: &f64, _: &mut StreamRng) -> Result<f64, DistributionError> {
            Ok(0.0)
        }

        fn stationary_log_unnormalized(&self, _: &f64) -> f64 {
            0.0
        }

        fn is_normalized(&self) -> bool {
            false
        }
    }

    #[test]
    fn all_underflow_row_returns_negative_infinity() {
        let mut rng = RngStream::root(82).rng();
        let row = estimate_kernel_log_row(&AllUnderflow, &0.0, &[1.0], 16, &mut rng).unwrap();
        assert_eq!(row[0], f64::NEG_INFINITY);
    }
}
