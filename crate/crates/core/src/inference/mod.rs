//! The DivSBL engine.

pub mod dual;
pub mod em;
pub mod posterior;
pub mod prune;
pub mod solver;
pub mod toeplitz;

pub use dual::{diversify_complete, dual_step, DualOutcome, DualState, DualUpdate};
pub use em::{
    compute_common_correlation, q_grad_sqrt_gamma, q_value, stationary_gamma,
    unconstrained_correlation, update_gamma,
};
pub use posterior::{compute_posterior, cost, update_beta};
pub use prune::{prune, prune_level};
pub use solver::{solve, DivSbl};
pub use toeplitz::{toeplitz_ar1, toeplitz_correct};
