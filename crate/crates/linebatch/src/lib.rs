//! Capacity bounds, achievable rates and recoding machinery for batched codes
//! on line networks of discrete memoryless channels.
//!
//! The crate is organised around five areas:
//!
//! * [`channel`] — finite DMCs: construction, composition, tensor powers,
//!   mutual information, capacity and zero-error structure.
//! * [`bounds`] — closed-form upper bounds on the batched-code capacity of a
//!   line network, achievable-rate lower bounds, error exponents and the
//!   optimal inner-block-length solver.
//! * [`bats`] — finite-field machinery and the rank-distribution Markov chain
//!   of random linear recoding, with its closed-form eigendecomposition.
//! * [`reduction`] — constructive channel reductions to uniform-noise
//!   channels, canonicalization of channel chains and whole-line reduction
//!   plans.
//! * [`sim`] — Monte Carlo simulation of recoding protocols and an exact
//!   small-instance engine for end-to-end transition matrices and brute-force
//!   optimal recoding.

// index loops read better than iterator chains in the elimination and
// eigendecomposition code
#![allow(clippy::needless_range_loop)]

pub mod bats;
pub mod bounds;
pub mod channel;
pub mod gf;
pub mod matrix;
pub mod reduction;
pub mod rng;
pub mod sim;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not reducible at rho = {rho}: largest achievable diagonal is {rho_best}")]
    NotReducible { rho: f64, rho_best: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Formats a value with 12 significant digits in scientific notation, the
/// convention for every CSV column and report field this crate emits.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}
