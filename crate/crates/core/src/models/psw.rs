//! The Polson-Scott-Windle DA Gibbs sampler for Bayesian logistic
//! regression: latent `w_i ~ PG(1, |u_i' beta|)`, then
//! `beta ~ N_p(Sigma(w) mu, Sigma(w))` with
//! `Sigma(w) = (U' Omega(w) U + B^-1)^-1` and
//! `mu = U'(y - 1/2) + B^-1 b`. The posterior over `beta` is known only up
//! to its normalizing constant, so spectrum estimation runs through the
//! rescaling estimator.

use super::ModelError;
use crate::da_core::DaModel;
use crate::distributions::{
    sample_pg1_with, DistributionError, PgSamplerKind, PolyaGammaParams, StreamRng,
};
use crate::linalg;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct PswModel {
    u: Array2<f64>,
    y: Vec<f64>,
    prior_mean: Vec<f64>,
    /// B^-1, row-major p x p.
    prior_precision: Vec<f64>,
    /// -p/2 log 2pi - 1/2 log det B.
    prior_log_norm: f64,
    /// U'(y - 1/2 1) + B^-1 b; constant across iterations.
    mu: Vec<f64>,
    pg_sampler: PgSamplerKind,
}

/// A drawn latent vector, prepared for repeated density evaluation: the
/// Cholesky factor of the conditional precision `Lambda(w) = U'Omega(w)U + B^-1`,
/// the conditional mean `Lambda(w)^-1 mu`, and `(1/2) log det Lambda(w)`.
#[derive(Debug, Clone)]
pub struct PswLatent {
    chol: Vec<f64>,
    mean: Vec<f64>,
    half_log_det: f64,
}

impl PswLatent {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl PswModel {
    /// `u` is the n x p design matrix (intercept column included by the
    /// caller), `y` the 0/1 responses, `(prior_mean, prior_cov)` the
    /// parameters of the proper normal prior on the coefficients.
    pub fn new(
        u: Array2<f64>,
        y: Vec<f64>,
        prior_mean: Vec<f64>,
        prior_cov: ArrayView2<'_, f64>,
    ) -> Result<Self, ModelError> {
        let (n, p) = u.dim();
        if n == 0 || p == 0 {
            return Err(ModelError::Invalid("design matrix must be nonempty".into()));
        }
        if y.len() != n {
            return Err(ModelError::Invalid(format!(
                "{} responses for {} design rows",
                y.len(),
                n
            )));
        }
        if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(ModelError::Invalid("responses must be 0 or 1".into()));
        }
        if prior_mean.len() != p || prior_cov.dim() != (p, p) {
            return Err(ModelError::Invalid("prior dimensions do not match the design".into()));
        }
        let cov: Vec<f64> = prior_cov.iter().copied().collect();
        let chol_cov = linalg::cholesky_lower(&cov, p)
            .ok_or_else(|| ModelError::Invalid("prior covariance is not positive definite".into()))?;
        // B^-1 column by column from the factorization
        let mut prior_precision = vec![0.0; p * p];
        for col in 0..p {
            let mut e = vec![0.0; p];
            e[col] = 1.0;
            let x = linalg::solve_lower_transpose(&chol_cov, &linalg::solve_lower(&chol_cov, &e, p), p);
            for row in 0..p {
                prior_precision[row * p + col] = x[row];
            }
        }
        let log_det_cov: f64 = (0..p).map(|i| 2.0 * chol_cov[i * p + i].ln()).sum();
        let prior_log_norm =
            -0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det_cov;
        let mut mu = vec![0.0; p];
        for i in 0..n {
            let w = y[i] - 0.5;
            for k in 0..p {
                mu[k] += u[[i, k]] * w;
            }
        }
        for k in 0..p {
            for l in 0..p {
                mu[k] += prior_precision[k * p + l] * prior_mean[l];
            }
        }
        Ok(Self {
            u,
            y,
            prior_mean,
            prior_precision,
            prior_log_norm,
            mu,
            pg_sampler: PgSamplerKind::Exact,
        })
    }

    /// Switches the PG(1, c) sampler backing the latent draws.
    pub fn with_pg_sampler(mut self, kind: PgSamplerKind) -> Self {
        self.pg_sampler = kind;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        self.u.dim()
    }

    pub fn design(&self) -> ArrayView2<'_, f64> {
        self.u.view()
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn prior_mean(&self) -> &[f64] {
        &self.prior_mean
    }

    /// The latent vector itself: n independent PG(1, |u_i' beta|) draws.
    pub fn draw_latent_w(
        &self,
        beta: &[f64],
        rng: &mut StreamRng,
    ) -> Result<Vec<f64>, DistributionError> {
        let (n, p) = self.u.dim();
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let mut t = 0.0;
            for k in 0..p {
                t += self.u[[i, k]] * beta[k];
            }
            let params = PolyaGammaParams::new(t.abs())?;
            w.push(sample_pg1_with(self.pg_sampler, params, rng));
        }
        Ok(w)
    }

    /// Forms and factorizes the conditional precision for one latent draw.
    pub fn prepare_latent(&self, w: &[f64]) -> Result<PswLatent, DistributionError> {
        let (n, p) = self.u.dim();
        let mut lambda = self.prior_precision.clone();
        for i in 0..n {
            let wi = w[i];
            for k in 0..p {
                let uik = self.u[[i, k]] * wi;
                for l in k..p {
                    lambda[k * p + l] += uik * self.u[[i, l]];
                }
            }
        }
        // fill the strict lower triangle from the upper
        for k in 0..p {
            for l in 0..k {
                lambda[k * p + l] = lambda[l * p + k];
            }
        }
        let chol =
            linalg::cholesky_lower(&lambda, p).ok_or(DistributionError::NotPositiveDefinite)?;
        let mean = linalg::solve_lower_transpose(&chol, &linalg::solve_lower(&chol, &self.mu, p), p);
        let half_log_det: f64 = (0..p).map(|i| chol[i * p + i].ln()).sum();
        Ok(PswLatent { chol, mean, half_log_det })
    }

    /// `log pi(beta_next | w, y)`: the conditional normal density through a
    /// fresh factorization of the precision formed from `w`.
    pub fn conditional_log_density_given_w(
        &self,
        beta_next: &[f64],
        w: &[f64],
    ) -> Result<f64, DistributionError> {
        let latent = self.prepare_latent(w)?;
        Ok(self.latent_log_density(beta_next, &latent))
    }

    fn latent_log_density(&self, beta_next: &[f64], latent: &PswLatent) -> f64 {
        let p = latent.mean.len();
        let l = &latent.chol;
        // (beta - mean)' Lambda (beta - mean) = |L'(beta - mean)|^2
        let mut quad = 0.0;
        for i in 0..p {
            let mut s = 0.0;
            for k in i..p {
                s += l[k * p + i] * (beta_next[k] - latent.mean[k]);
            }
            quad += s * s;
        }
        -0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln() + latent.half_log_det - 0.5 * quad
    }
}

impl DaModel for PswModel {
    type State = Vec<f64>;
    type Latent = PswLatent;

    fn model_id(&self) -> &str {
        "psw-logistic"
    }

    fn draw_latent(&self, x: &Vec<f64>, rng: &mut StreamRng) -> Result<PswLatent, DistributionError> {
        let w = self.draw_latent_w(x, rng)?;
        self.prepare_latent(&w)
    }

    fn latent_conditional_log_density(&self, x_next: &Vec<f64>, z: &PswLatent) -> f64 {
        self.latent_log_density(x_next, z)
    }

    fn draw_next_state(&self, z: &PswLatent, rng: &mut StreamRng) -> Result<Vec<f64>, DistributionError> {
        let p = z.mean.len();
        let noise: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        // solving L' x = noise gives covariance (L L')^-1 = Lambda^-1
        let x = linalg::solve_lower_transpose(&z.chol, &noise, p);
        Ok(z.mean.iter().zip(&x).map(|(m, v)| m + v).collect())
    }

    fn stationary_log_unnormalized(&self, beta: &Vec<f64>) -> f64 {
        let (n, p) = self.u.dim();
        // normal prior log density
        let mut quad = 0.0;
        for k in 0..p {
            let dk = beta[k] - self.prior_mean[k];
            for l in 0..p {
                quad += dk * self.prior_precision[k * p + l] * (beta[l] - self.prior_mean[l]);
            }
        }
        let mut value = self.prior_log_norm - 0.5 * quad;
        // Bernoulli-logistic likelihood: y log F(t) + (1-y) log(1-F(t))
        for i in 0..n {
            let mut t = 0.0;
            for k in 0..p {
                t += self.u[[i, k]] * beta[k];
            }
            value -= if self.y[i] == 1.0 { softplus(-t) } else { softplus(t) };
        }
        value
    }

    fn is_normalized(&self) -> bool {
        false
    }
}

/// `log(1 + exp(t))` with the large-argument branches cut at |t| = 35.
#[inline]
fn softplus(t: f64) -> f64 {
    if t > 35.0 {
        t
    } else if t < -35.0 {
        t.exp()
    } else {
        t.exp().ln_1p()
    }
}

/// A logistic maximum likelihood fit.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub beta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Newton-Raphson on the logistic log likelihood, starting from zero.
/// Stops when the gradient norm drops below 1e-8 or after 50 iterations;
/// a non-converged fit (complete separation, say) still returns the last
/// iterate, flagged.
pub fn fit_logistic_mle(u: ArrayView2<'_, f64>, y: &[f64]) -> Result<LogisticFit, ModelError> {
    let (n, p) = u.dim();
    if y.len() != n || n == 0 || p == 0 {
        return Err(ModelError::Invalid("design and response sizes do not match".into()));
    }
    let mut beta = vec![0.0; p];
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=50 {
        iterations = it;
        let mut grad = vec![0.0; p];
        let mut hess = vec![0.0; p * p];
        for i in 0..n {
            let mut t = 0.0;
            for k in 0..p {
                t += u[[i, k]] * beta[k];
            }
            let f = 1.0 / (1.0 + (-t).exp());
            let r = y[i] - f;
            let v = f * (1.0 - f);
            for k in 0..p {
                grad[k] += u[[i, k]] * r;
                for l in k..p {
                    hess[k * p + l] += v * u[[i, k]] * u[[i, l]];
                }
            }
        }
        for k in 0..p {
            for l in 0..k {
                hess[k * p + l] = hess[l * p + k];
            }
        }
        grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < 1e-8 {
            return Ok(LogisticFit { beta, converged: true, iterations, grad_norm });
        }
        let Some(chol) = linalg::cholesky_lower(&hess, p) else {
            break; // flat or separated likelihood; report the last iterate
        };
        let step = linalg::solve_lower_transpose(&chol, &linalg::solve_lower(&chol, &grad, p), p);
        for k in 0..p {
            beta[k] += step[k];
        }
    }
    Ok(LogisticFit { beta, converged: grad_norm < 1e-8, iterations, grad_norm })
}
