//! The normal-normal toy DA chain: latent `z ~ N(x/2, 1/8)`, next state
//! `x' ~ N(z, 1/4)`. The state marginal of the consistent Gaussian pair is
//! `N(0, 1/2)` (the latent marginal is `N(0, 1/4)`), and the operator
//! spectrum is known exactly (`lambda_n = 2^-n`), which makes the chain the
//! ground truth for estimator tests.

use super::normal_log_density;
use crate::da_core::DaModel;
use crate::distributions::{DistributionError, StreamRng};
use rand_distr::{Distribution, StandardNormal};

const LATENT_VAR: f64 = 0.125;
const STATE_VAR: f64 = 0.25;
/// Marginalizing the latent convolves the two normals: 1/8 + 1/4.
const KERNEL_VAR: f64 = LATENT_VAR + STATE_VAR;
/// The unique variance making the kernel reversible: detailed balance with
/// the N(x/2, 3/8) kernel pins the stationary law to N(0, 1/2).
const STATIONARY_VAR: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default)]
pub struct ToyModel;

impl ToyModel {
    /// The known spectrum `2^-n`, truncated where the remaining tail has
    /// `l2` mass below 1e-8.
    pub fn true_spectrum() -> Vec<f64> {
        let mut values = Vec::new();
        let mut n = 0i32;
        loop {
            // l2 mass of the tail 2^-n, 2^-(n+1), ...: sqrt(sum_{k>=n} 4^-k)
            let tail = (4f64.powi(-n) * 4.0 / 3.0).sqrt();
            if tail < 1e-8 {
                break;
            }
            values.push(2f64.powi(-n));
            n += 1;
        }
        values
    }
}

impl DaModel for ToyModel {
    type State = f64;
    type Latent = f64;

    fn model_id(&self) -> &str {
        "toy-normal"
    }

    fn draw_latent(&self, x: &f64, rng: &mut StreamRng) -> Result<f64, DistributionError> {
        let e: f64 = StandardNormal.sample(rng);
        Ok(0.5 * x + LATENT_VAR.sqrt() * e)
    }

    fn latent_conditional_log_density(&self, x_next: &f64, z: &f64) -> f64 {
        normal_log_density(*x_next, *z, STATE_VAR)
    }

    fn draw_next_state(&self, z: &f64, rng: &mut StreamRng) -> Result<f64, DistributionError> {
        let e: f64 = StandardNormal.sample(rng);
        Ok(z + STATE_VAR.sqrt() * e)
    }

    fn stationary_log_unnormalized(&self, x: &f64) -> f64 {
        normal_log_density(*x, 0.0, STATIONARY_VAR)
    }

    fn is_normalized(&self) -> bool {
        true
    }

    fn exact_log_kernel(&self, x: &f64, x_next: &f64) -> Option<f64> {
        Some(normal_log_density(*x_next, 0.5 * x, KERNEL_VAR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::da_core::estimate_kernel_log_row;
    use crate::distributions::RngStream;
    use rand::Rng;

    #[test]
    fn kernel_at_origin_is_the_convolved_normal_density() {
        let model = ToyModel;
        let v = model.exact_log_kernel(&0.0, &0.0).unwrap().exp();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI * 0.375).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn detailed_balance_ratio_is_symmetric() {
        // k(x,x')/pi(x') = k(x',x)/pi(x) by reversibility
        let model = ToyModel;
        let mut rng = RngStream::root(50).rng();
        for _ in 0..100 {
            let x = rng.gen_range(-2.0..2.0);
            let xp = rng.gen_range(-2.0..2.0);
            let a = model.exact_log_kernel(&x, &xp).unwrap()
                - model.stationary_log_unnormalized(&xp);
            let b = model.exact_log_kernel(&xp, &x).unwrap()
                - model.stationary_log_unnormalized(&x);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_kernel_agrees_with_exact() {
        let model = ToyModel;
        let n = 100_000;
        let mut rng = RngStream::root(51).rng();
        // estimate k(0.4, 0.2) and track the Monte Carlo standard error
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let z = model.draw_latent(&0.4, &mut rng).unwrap();
            let v = model.latent_conditional_log_density(&0.2, &z).exp();
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = model.exact_log_kernel(&0.4, &0.2).unwrap().exp();
        assert!((mean - exact).abs() < 4.0 * se, "mean {mean}, exact {exact}, se {se}");

        // the log-space row estimator is the same average
        let mut rng_row = RngStream::root(51).rng();
        let row = estimate_kernel_log_row(&model, &0.4, &[0.2], n, &mut rng_row).unwrap();
        assert!((row[0].exp() - mean).abs() < 1e-12 * mean);
    }

    #[test]
    fn true_spectrum_is_geometric_with_tiny_tail() {
        let s = ToyModel::true_spectrum();
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 0.5);
        assert!(s.len() > 20);
        let dropped_mass: f64 = (s.len()..200).map(|n| 4f64.powi(-(n as i32))).sum::<f64>().sqrt();
        assert!(dropped_mass < 1e-8);
    }
}
