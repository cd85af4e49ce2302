//! Spectrum estimation for data augmentation (DA) Markov operators via
//! random matrix approximation.
//!
//! A reversible Markov chain with transition density `k` and stationary
//! density `pi` defines a self-adjoint operator on `L2(pi)`. When that
//! operator is trace class, the eigenvalues of the `m x m` zero-diagonal
//! matrix with off-diagonal entries `k(X_j, X_j') / (m * pi(X_j'))`, built
//! from `m` chain realizations, consistently estimate the operator's full
//! spectrum. This crate implements that estimator in three forms:
//!
//! * exact kernel entries, when `k` is available in closed form
//!   ([`spectrum::build_erma_matrix`]);
//! * Monte Carlo kernel entries for DA chains, where `k` is an intractable
//!   integral over the latent space ([`spectrum::build_mcrma_matrix`]);
//! * Monte Carlo entries with an unnormalized stationary density, followed
//!   by rescaling so the leading eigenvalue is 1
//!   ([`spectrum::build_mcrma_unnormalized_matrix`]).
//!
//! Concrete DA samplers live in [`models`]: a normal-normal toy chain with
//! known spectrum, the Polya-Gamma logistic regression Gibbs sampler, and
//! two latent-label samplers for a two component normal mixture.

pub mod da_core;
pub mod distributions;
mod linalg;
pub mod models;
pub mod numerics;
pub mod spectrum;
