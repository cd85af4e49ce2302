//! The Polya-Gamma PG(1, c) family.
//!
//! PG(1, 0) is the law of `(2/pi^2) * sum_l E_l / (2l-1)^2` for IID standard
//! exponentials `E_l`; PG(1, c) is its exponential tilting by
//! `cosh(c/2) exp(-c^2 w / 2)`. The density of PG(1, 0) has two equivalent
//! alternating-series expansions (one converging fast for small `w`, one for
//! large `w`), which drive the density evaluation, the distribution
//! function, and the accept/reject sampler below.

use super::{logsumexp2, DistributionError, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Tilt parameter of a PG(1, c) distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyaGammaParams {
    c: f64,
}

impl PolyaGammaParams {
    pub fn new(c: f64) -> Result<Self, DistributionError> {
        if !c.is_finite() || c < 0.0 {
            return Err(DistributionError::InvalidParameter { name: "c", value: c });
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Which PG(1, c) sampler to run.
///
/// `Exact` is the alternating-series accept/reject sampler (truncated
/// inverse-Gaussian and exponential proposals with partial-sum squeezing).
/// `SeriesRejection` truncates the defining exponential sum at
/// [`SERIES_FALLBACK_TERMS`] terms and tilts by rejection; it exists as an
/// independent cross-check of the exact sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgSamplerKind {
    #[default]
    Exact,
    SeriesRejection,
}

/// Number of exponential terms kept by the fallback sampler.
pub const SERIES_FALLBACK_TERMS: usize = 200;

/// One PG(1, c) draw with the exact sampler.
pub fn sample_pg1(params: PolyaGammaParams, rng: &mut StreamRng) -> f64 {
    // PG(1, c) = X / 4 where X follows the Jacobi-type law with tilt c/2.
    0.25 * sample_jacobi(0.5 * params.c, rng)
}

/// One PG(1, c) draw with the requested sampler.
pub fn sample_pg1_with(kind: PgSamplerKind, params: PolyaGammaParams, rng: &mut StreamRng) -> f64 {
    match kind {
        PgSamplerKind::Exact => sample_pg1(params, rng),
        PgSamplerKind::SeriesRejection => sample_pg1_series(params, rng),
    }
}

/// One PG(1, c) draw from the truncated-series fallback sampler: draw the
/// untilted variable from its defining sum truncated at
/// [`SERIES_FALLBACK_TERMS`] terms, then accept with probability
/// `exp(-c^2 w / 2)` (the tilt divided by its bound `cosh(c/2)`).
pub fn sample_pg1_series(params: PolyaGammaParams, rng: &mut StreamRng) -> f64 {
    let c = params.c;
    loop {
        let mut w = 0.0;
        for l in 1..=SERIES_FALLBACK_TERMS {
            let e: f64 = Exp1.sample(rng);
            let k = (2 * l - 1) as f64;
            w += e / (k * k);
        }
        w *= 2.0 / (PI * PI);
        if rng.gen::<f64>() < (-0.5 * c * c * w).exp() {
            return w;
        }
    }
}

/// Log density of PG(1, c) at `w > 0`.
///
/// The untilted series is truncated adaptively: both expansions alternate
/// with strictly decreasing terms on their side of the crossover, so the
/// remainder is bounded by the first omitted term, and summation stops once
/// that term drops below `1e-12` of the running partial sum.
pub fn pg1_log_density(w: f64, params: PolyaGammaParams) -> Result<f64, DistributionError> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(DistributionError::InvalidParameter { name: "w", value: w });
    }
    let c = params.c;
    Ok(log_series_density(w) + ln_cosh(0.5 * c) - 0.5 * c * c * w)
}

/// Distribution function of PG(1, c) at `w`.
///
/// Each series term of the density integrates in closed form (an error
/// function for c = 0, an inverse-Gaussian distribution function for c > 0),
/// so no quadrature is involved.
pub fn pg1_cdf(w: f64, params: PolyaGammaParams) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let c = params.c;
    let value = if c == 0.0 {
        if w <= SERIES_CROSSOVER {
            // sum_n (-1)^n 2 erfc(a_n / sqrt(2w)), a_n = n + 1/2
            let mut s = 0.0;
            let mut n = 0u32;
            loop {
                let a_n = n as f64 + 0.5;
                let term = 2.0 * erfc(a_n / (2.0 * w).sqrt());
                s += if n % 2 == 0 { term } else { -term };
                if term < 1e-14 || n > 10_000 {
                    break;
                }
                n += 1;
            }
            s
        } else {
            // 1 - tail, tail_n = (4 / ((2n+1) pi)) exp(-(2n+1)^2 pi^2 w / 2)
            let mut tail = 0.0;
            let mut n = 0u32;
            loop {
                let k = 2.0 * n as f64 + 1.0;
                let term = 4.0 / (k * PI) * (-k * k * PI * PI * w * 0.5).exp();
                tail += if n % 2 == 0 { term } else { -term };
                if term < 1e-14 || n > 10_000 {
                    break;
                }
                n += 1;
            }
            1.0 - tail
        }
    } else {
        // cosh(c/2) sum_n (-1)^n 2 exp(-a_n c) F_IG(w; mu = a_n/c, lambda = a_n^2)
        let sqrt_w = w.sqrt();
        let mut s = 0.0;
        let mut n = 0u32;
        loop {
            let a_n = n as f64 + 0.5;
            let z1 = c * sqrt_w - a_n / sqrt_w;
            let z2 = -(c * sqrt_w + a_n / sqrt_w);
            let term =
                2.0 * ((-a_n * c).exp() * norm_cdf(z1) + (a_n * c + ln_norm_cdf(z2)).exp());
            s += if n % 2 == 0 { term } else { -term };
            if term < 1e-14 || n > 10_000 {
                break;
            }
            n += 1;
        }
        ln_cosh(0.5 * c).exp() * s
    };
    value.clamp(0.0, 1.0)
}

/// Crossover between the small-`w` and large-`w` series expansions. Both
/// series have strictly decreasing terms on their side of any crossover in
/// (0.028, 0.91).
const SERIES_CROSSOVER: f64 = 0.2;

/// Log of the untilted PG(1, 0) density, via whichever expansion converges
/// on this side of the crossover. The leading term is factored out in log
/// space so small `w` cannot underflow.
fn log_series_density(w: f64) -> f64 {
    const RTOL: f64 = 1e-12;
    if w <= SERIES_CROSSOVER {
        // t_n = (2n+1)/sqrt(2 pi w^3) exp(-(2n+1)^2/(8w))
        let log_t0 = -0.5 * (2.0 * PI * w * w * w).ln() - 1.0 / (8.0 * w);
        let mut s = 1.0;
        let mut n = 1u32;
        loop {
            let k = 2.0 * n as f64 + 1.0;
            let ratio = k * (-(k * k - 1.0) / (8.0 * w)).exp();
            if ratio < RTOL * s {
                break;
            }
            s += if n % 2 == 0 { ratio } else { -ratio };
            n += 1;
        }
        log_t0 + s.ln()
    } else {
        // t_n = 2 pi (n + 1/2) exp(-(2n+1)^2 pi^2 w / 8) ... in the (2n+1) form:
        // t_n = pi (2n+1) exp(-(2n+1)^2 pi^2 w / 2) * 2 / 2; leading term n = 0.
        let log_t0 = (2.0 * PI).ln() - PI * PI * w * 0.5;
        let mut s = 1.0;
        let mut n = 1u32;
        loop {
            let k = 2.0 * n as f64 + 1.0;
            let ratio = k * (-(k * k - 1.0) * PI * PI * w * 0.5).exp();
            if ratio < RTOL * s {
                break;
            }
            s += if n % 2 == 0 { ratio } else { -ratio };
            n += 1;
        }
        log_t0 + s.ln()
    }
}

/// `log cosh(t)` without overflow.
fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn ln_norm_cdf(x: f64) -> f64 {
    if x < -36.0 {
        // erfc underflows around here; switch to the leading asymptotic term
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln()
    } else {
        norm_cdf(x).ln()
    }
}

/// Truncation point separating the inverse-Gaussian proposal (left) from
/// the exponential proposal (right) in the exact sampler.
const TRUNC: f64 = 0.64;

/// Series coefficients `a_n(x)` of the Jacobi-type density, in the
/// expansion appropriate for `x` relative to [`TRUNC`].
fn a_coef(n: u32, x: f64) -> f64 {
    let np = n as f64 + 0.5;
    if x <= TRUNC {
        PI * np * (2.0 / (PI * x)).powf(1.5) * (-2.0 * np * np / x).exp()
    } else {
        PI * np * (-0.5 * np * np * PI * PI * x).exp()
    }
}

/// Probability that the proposal draws from the exponential (right) piece.
fn right_piece_mass(z: f64) -> f64 {
    let t = TRUNC;
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let b = (t * z - 1.0) / t.sqrt();
    let a = -(t * z + 1.0) / t.sqrt();
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + ln_norm_cdf(b);
    let xa = x0 + z + ln_norm_cdf(a);
    let ln_q_div_p = (4.0 / PI).ln() + logsumexp2(xb, xa);
    // p / (p + q) = 1 / (1 + q/p); exp overflow saturates to 0 correctly
    1.0 / (1.0 + ln_q_div_p.exp())
}

/// Inverse-Gaussian IG(1/z, 1) truncated to (0, TRUNC].
fn sample_truncated_inverse_gaussian(z: f64, rng: &mut StreamRng) -> f64 {
    let t = TRUNC;
    if z < 1.0 / t {
        // mean above the truncation point: rejection from the truncated
        // stable subordinator, thinned by the tilt exp(-z^2 x / 2)
        loop {
            let (e1, _e2) = loop {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                if e1 * e1 <= 2.0 * e2 / t {
                    break (e1, e2);
                }
            };
            let x = t / ((1.0 + t * e1) * (1.0 + t * e1));
            if rng.gen::<f64>() <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    } else {
        // mean inside (0, t]: draw IG(mu, 1) draws until one lands
        let mu = 1.0 / z;
        loop {
            let y: f64 = StandardNormal.sample(rng);
            let y = y * y;
            let mu_y = mu * y;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.gen::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                return x;
            }
        }
    }
}

/// Accept/reject sampler for the Jacobi-type law with tilt `z >= 0`; the
/// alternating partial sums of `a_n` squeeze the density from both sides,
/// so each proposal is resolved after finitely many terms.
fn sample_jacobi(z: f64, rng: &mut StreamRng) -> f64 {
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let p_right = right_piece_mass(z);
    loop {
        let x = if rng.gen::<f64>() < p_right {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / fz
        } else {
            sample_truncated_inverse_gaussian(z, rng)
        };
        let mut s = a_coef(0, x);
        let y = rng.gen::<f64>() * s;
        let mut n = 0u32;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= a_coef(n, x);
                if y <= s {
                    return x;
                }
            } else {
                s += a_coef(n, x);
                if y > s {
                    break;
                }
            }
            // at fp resolution the partial sums have collapsed; resample
            if n > 200 {
                break;
            }
        }
    }
}
