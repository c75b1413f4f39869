//! Diversified block sparse Bayesian learning.
//!
//! Recovers a block-sparse `x` from `y = Φx + n` with a Gaussian prior whose
//! per-element variances and per-block correlation matrices are learned by
//! EM, the correlations being tied together by a log-determinant constraint
//! enforced with dual ascent.

pub mod baselines;
pub mod config;
pub mod datagen;
pub mod error;
pub mod inference;
pub mod io;
mod linalg;
pub mod metrics;
pub mod model;

pub use config::{CorrelationMode, DualMode, GammaInit, SolveResult, SolverConfig};
pub use error::{Error, Result};
pub use inference::{solve, DivSbl};
pub use model::{
    assemble_prior_covariance, block_view, BlockLayout, DiversifiedPrior, MeasurementModel,
    Posterior,
};
