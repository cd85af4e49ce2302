//! Two component normal mixture with known common variance, sampled by
//! latent component labels. The chain tracked for spectrum estimation is
//! the label vector `z in {1,2}^n` (a finite space), with the parameter
//! vector `theta = (mu1, mu2, p)` acting as the DA latent: one step draws
//! `theta ~ pi(theta | z, y)` and then `z' ~ pi(z' | theta, y)`.
//!
//! Two variants share the machinery. `Mda` is the plain two-block sampler.
//! `Fs` inserts a fair label-switching move around the parameter draw,
//! which in DA form replaces both conditionals by their average over the
//! flipped labels.

use super::{normal_log_density, ModelError};
use crate::da_core::DaModel;
use crate::distributions::{
    logsumexp2, sample_beta, sample_categorical, DistributionError, StreamRng,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureVariant {
    Mda,
    Fs,
}

/// The mixture parameter vector `(mu1, mu2, p)` with `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureTheta {
    pub mu1: f64,
    pub mu2: f64,
    pub p: f64,
}

impl MixtureTheta {
    pub fn new(mu1: f64, mu2: f64, p: f64) -> Result<Self, ModelError> {
        if !(p > 0.0 && p < 1.0) || !mu1.is_finite() || !mu2.is_finite() {
            return Err(ModelError::Invalid(format!(
                "mixture parameters out of range: mu = ({mu1}, {mu2}), p = {p}"
            )));
        }
        Ok(Self { mu1, mu2, p })
    }
}

/// A drawn parameter vector, prepared for repeated label-density
/// evaluations: per observation the log membership weights
/// `log ptilde_i` and `log(1 - ptilde_i)`, cached as a base plus
/// difference so one dot product scores a label vector and its flip.
#[derive(Debug, Clone)]
pub struct MixtureLatent {
    pub theta: MixtureTheta,
    log_p1: Vec<f64>,
    /// log(1 - ptilde_i) - log ptilde_i
    diff: Vec<f64>,
    total_p1: f64,
    total_diff: f64,
}

/// Posterior parameters of `theta | z, y`: `p ~ Beta(c1+1, c2+1)` and
/// `mu_j ~ N(c_j ybar_j / (c_j + 1), tau^2 / (c_j + 1))`, with `ybar_j = 0`
/// for an empty component (the update then collapses to the prior).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConditional {
    pub beta: (f64, f64),
    pub mu_mean: [f64; 2],
    pub mu_var: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct MixtureModel {
    y: Vec<f64>,
    tau: f64,
    variant: MixtureVariant,
    /// ln k! for k = 0..=n+1, for the Beta function in the stationary mass.
    ln_factorial: Vec<f64>,
    id: &'static str,
}

impl MixtureModel {
    pub fn new(y: Vec<f64>, tau: f64, variant: MixtureVariant) -> Result<Self, ModelError> {
        if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Invalid("observations must be nonempty and finite".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ModelError::Invalid(format!("tau must be positive, got {tau}")));
        }
        let mut ln_factorial = vec![0.0; y.len() + 2];
        for k in 2..ln_factorial.len() {
            ln_factorial[k] = ln_factorial[k - 1] + (k as f64).ln();
        }
        let id = match variant {
            MixtureVariant::Mda => "mixture-mda",
            MixtureVariant::Fs => "mixture-fs",
        };
        Ok(Self { y, tau, variant, ln_factorial, id })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn variant(&self) -> MixtureVariant {
        self.variant
    }

    pub fn observations(&self) -> &[f64] {
        &self.y
    }

    /// Component counts and means `(c_j, ybar_j)` for a label vector.
    fn counts(&self, z: &[u8]) -> ((f64, f64), (f64, f64)) {
        debug_assert_eq!(z.len(), self.y.len());
        let (mut c1, mut c2) = (0.0, 0.0);
        let (mut s1, mut s2) = (0.0, 0.0);
        for (zi, yi) in z.iter().zip(&self.y) {
            if *zi == 1 {
                c1 += 1.0;
                s1 += yi;
            } else {
                c2 += 1.0;
                s2 += yi;
            }
        }
        let ybar1 = if c1 > 0.0 { s1 / c1 } else { 0.0 };
        let ybar2 = if c2 > 0.0 { s2 / c2 } else { 0.0 };
        ((c1, ybar1), (c2, ybar2))
    }

    /// The conditional posterior of `theta` given labels `z`.
    pub fn theta_conditional(&self, z: &[u8]) -> ThetaConditional {
        let ((c1, ybar1), (c2, ybar2)) = self.counts(z);
        let t2 = self.tau * self.tau;
        ThetaConditional {
            beta: (c1 + 1.0, c2 + 1.0),
            mu_mean: [c1 / (c1 + 1.0) * ybar1, c2 / (c2 + 1.0) * ybar2],
            mu_var: [t2 / (c1 + 1.0), t2 / (c2 + 1.0)],
        }
    }

    /// One draw of `theta ~ pi(theta | z, y)`.
    pub fn draw_theta(&self, z: &[u8], rng: &mut StreamRng) -> Result<MixtureTheta, DistributionError> {
        let cond = self.theta_conditional(z);
        let p = sample_beta(cond.beta.0, cond.beta.1, rng)?;
        // Beta draws with integer shapes >= 1 touch the endpoints only at
        // fp resolution; nudge inside the open interval
        let p = p.clamp(1e-300, 1.0 - 1e-16);
        let e1: f64 = StandardNormal.sample(rng);
        let e2: f64 = StandardNormal.sample(rng);
        Ok(MixtureTheta {
            mu1: cond.mu_mean[0] + cond.mu_var[0].sqrt() * e1,
            mu2: cond.mu_mean[1] + cond.mu_var[1].sqrt() * e2,
            p,
        })
    }

    /// Caches the per-observation membership log weights of a parameter
    /// vector for repeated label-density evaluation.
    pub fn prepare_latent(&self, theta: MixtureTheta) -> MixtureLatent {
        let n = self.y.len();
        let mut log_p1 = Vec::with_capacity(n);
        let mut diff = Vec::with_capacity(n);
        let (mut total_p1, mut total_diff) = (0.0, 0.0);
        let (lp, lq) = (theta.p.ln(), (1.0 - theta.p).ln());
        let t2 = self.tau * self.tau;
        for yi in &self.y {
            let a = lp + normal_log_density(*yi, theta.mu1, t2);
            let b = lq + normal_log_density(*yi, theta.mu2, t2);
            let lse = logsumexp2(a, b);
            let l1 = a - lse;
            let l2 = b - lse;
            log_p1.push(l1);
            diff.push(l2 - l1);
            total_p1 += l1;
            total_diff += l2 - l1;
        }
        MixtureLatent { theta, log_p1, diff, total_p1, total_diff }
    }

    /// `log pi(z | theta, y)` for the plain (MDA) conditional.
    fn label_log_mass(&self, z: &[u8], latent: &MixtureLatent) -> f64 {
        debug_assert_eq!(z.len(), self.y.len());
        let mut flipped_weight = 0.0;
        for (zi, d) in z.iter().zip(&latent.diff) {
            flipped_weight += f64::from(zi - 1) * d;
        }
        latent.total_p1 + flipped_weight
    }

    /// All `2^n` label vectors, ordered with coordinate 0 cycling fastest.
    pub fn enumerate_labels(n: usize) -> Vec<Vec<u8>> {
        assert!(n < usize::BITS as usize, "label space too large to enumerate");
        (0..1usize << n)
            .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { 2 } else { 1 }).collect())
            .collect()
    }

    /// `z` with its 1's and 2's flipped.
    pub fn flip(z: &[u8]) -> Vec<u8> {
        z.iter().map(|zi| 3 - zi).collect()
    }
}

impl DaModel for MixtureModel {
    type State = Vec<u8>;
    type Latent = MixtureLatent;

    fn model_id(&self) -> &str {
        self.id
    }

    fn draw_latent(&self, z: &Vec<u8>, rng: &mut StreamRng) -> Result<MixtureLatent, DistributionError> {
        let theta = match self.variant {
            MixtureVariant::Mda => self.draw_theta(z, rng)?,
            MixtureVariant::Fs => {
                // label switch first: condition on z or its flip, fairly
                if rng.gen_bool(0.5) {
                    self.draw_theta(&Self::flip(z), rng)?
                } else {
                    self.draw_theta(z, rng)?
                }
            }
        };
        Ok(self.prepare_latent(theta))
    }

    fn latent_conditional_log_density(&self, z_next: &Vec<u8>, latent: &MixtureLatent) -> f64 {
        let direct = self.label_log_mass(z_next, latent);
        match self.variant {
            MixtureVariant::Mda => direct,
            MixtureVariant::Fs => {
                // average of the mass at z and at its flip
                let flipped = 2.0 * latent.total_p1 + latent.total_diff - direct;
                logsumexp2(direct, flipped) - std::f64::consts::LN_2
            }
        }
    }

    fn draw_next_state(&self, latent: &MixtureLatent, rng: &mut StreamRng) -> Result<Vec<u8>, DistributionError> {
        let mut z = Vec::with_capacity(self.y.len());
        for l1 in &latent.log_p1 {
            let p1 = l1.exp();
            let idx = sample_categorical(&[p1, 1.0 - p1], rng)?;
            z.push(idx as u8 + 1);
        }
        if self.variant == MixtureVariant::Fs && rng.gen_bool(0.5) {
            z = Self::flip(&z);
        }
        Ok(z)
    }

    fn stationary_log_unnormalized(&self, z: &Vec<u8>) -> f64 {
        let ((c1, ybar1), (c2, ybar2)) = self.counts(z);
        let t2 = self.tau * self.tau;
        // log B(c1+1, c2+1) over integer counts is a factorial ratio
        let log_beta = self.ln_factorial[c1 as usize] + self.ln_factorial[c2 as usize]
            - self.ln_factorial[c1 as usize + c2 as usize + 1];
        let comp = |c: f64, ybar: f64| -> f64 {
            -0.5 * (1.0 + c).ln() + c * c * ybar * ybar / (2.0 * t2 * (1.0 + c))
        };
        // grouping keeps the value exactly invariant under label flips:
        // fp addition commutes, so swapping the two comp terms is exact
        log_beta + (comp(c1, ybar1) + comp(c2, ybar2))
    }

    fn is_normalized(&self) -> bool {
        false
    }
}

/// Lloyd's k-means with k = 2, seeded at the extreme observations, run to
/// an assignment fixpoint (at most 100 sweeps). Component 1 is the cluster
/// seeded at the minimum; its share becomes `p`, clipped to [0.05, 0.95].
pub fn mixture_kmeans_start(y: &[f64]) -> Result<MixtureTheta, ModelError> {
    if y.len() < 2 {
        return Err(ModelError::Invalid("k-means needs at least two observations".into()));
    }
    let min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return MixtureTheta::new(min, min, 0.5);
    }
    let (mut m1, mut m2) = (min, max);
    let mut assignment = vec![false; y.len()];
    for _ in 0..100 {
        let mut changed = false;
        for (i, yi) in y.iter().enumerate() {
            let to_second = (yi - m2).abs() < (yi - m1).abs();
            if assignment[i] != to_second {
                assignment[i] = to_second;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let (mut s1, mut c1, mut s2, mut c2) = (0.0, 0.0, 0.0, 0.0);
        for (i, yi) in y.iter().enumerate() {
            if assignment[i] {
                s2 += yi;
                c2 += 1.0;
            } else {
                s1 += yi;
                c1 += 1.0;
            }
        }
        if c1 > 0.0 {
            m1 = s1 / c1;
        }
        if c2 > 0.0 {
            m2 = s2 / c2;
        }
    }
    let share1 = assignment.iter().filter(|a| !**a).count() as f64 / y.len() as f64;
    MixtureTheta::new(m1, m2, share1.clamp(0.05, 0.95))
}

/// Simulates `n` observations from the mixture: component 1 with
/// probability `p`, then a normal observation around the component mean.
pub fn simulate_mixture_data(
    theta: &MixtureTheta,
    tau: f64,
    n: usize,
    rng: &mut StreamRng,
) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mean = if rng.gen_bool(theta.p) { theta.mu1 } else { theta.mu2 };
            let e: f64 = StandardNormal.sample(rng);
            mean + tau * e
        })
        .collect()
}
