//! Dual ascent on the log-determinant constraints
//! `log det B_i = log det B` for every active block.
//!
//! One step sets `B_i ← U_i / (1 + 2λ_i)` with the current multiplier and
//! then moves `λ_i` along the residual of the *incoming* `B_i`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::inference::em::unconstrained_correlation;
use crate::linalg::{spd_log_det, spd_repair};
use crate::model::{BlockLayout, DiversifiedPrior, Posterior};

/// Smallest admissible value of `1 + 2λ`.
pub const MIN_SCALE: f64 = 1e-6;

fn clamp_multiplier(lambda: f64) -> f64 {
    lambda.max(0.5 * (MIN_SCALE - 1.0))
}

/// Multiplier bookkeeping carried across outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub multipliers: Vec<f64>,
    /// `log det B_i − log det B` of the current `B_i`; zero for pruned blocks.
    pub residuals: Vec<f64>,
    /// Index `k` of the next step; its step size is `1/k`.
    pub step_index: usize,
}

impl DualState {
    pub fn new(num_blocks: usize) -> Self {
        Self {
            multipliers: vec![0.0; num_blocks],
            residuals: vec![0.0; num_blocks],
            step_index: 1,
        }
    }

    pub fn step_size(&self) -> f64 {
        1.0 / self.step_index as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualUpdate {
    pub correlations: Vec<DMatrix<f64>>,
    pub multipliers: Vec<f64>,
    /// Residuals of the incoming `B_i`.
    pub residuals_before: Vec<f64>,
    /// Residuals of the returned `B_i`.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualOutcome {
    pub correlations: Vec<DMatrix<f64>>,
    pub multipliers: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Steps taken per block.
    pub iterations: Vec<usize>,
    pub converged: bool,
}

fn log_det(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    spd_log_det(m).ok_or_else(|| Error::Domain(format!("{what} is not positive definite")))
}

struct BlockProblem {
    unconstrained: DMatrix<f64>,
    log_det_unconstrained: f64,
}

fn block_problem(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
    i: usize,
) -> Result<BlockProblem> {
    let unconstrained = spd_repair(unconstrained_correlation(prior, posterior, layout, i)?);
    let log_det_unconstrained = log_det(&unconstrained, "unconstrained correlation")?;
    Ok(BlockProblem {
        unconstrained,
        log_det_unconstrained,
    })
}

/// One dual-ascent step with step size `step` on every active block.
pub fn dual_step(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
    common: &DMatrix<f64>,
    step: f64,
) -> Result<DualUpdate> {
    let g = layout.num_blocks();
    let l = layout.block_size() as f64;
    let target = log_det(common, "common correlation")?;
    let mut correlations = prior.correlations().to_vec();
    let mut multipliers = prior.multipliers().to_vec();
    let mut residuals_before = vec![0.0; g];
    let mut residuals = vec![0.0; g];
    for i in (0..g).filter(|&i| prior.is_active(i)) {
        let lambda = multipliers[i];
        if 1.0 + 2.0 * lambda <= 0.0 {
            return Err(Error::Domain(format!("multiplier {i} violates 1 + 2λ > 0")));
        }
        let problem = block_problem(prior, posterior, layout, i)?;
        let before = log_det(prior.correlation(i), "correlation matrix")? - target;
        let scale = 1.0 + 2.0 * lambda;
        correlations[i] = problem.unconstrained / scale;
        multipliers[i] = clamp_multiplier(lambda + step * before);
        residuals_before[i] = before;
        residuals[i] = problem.log_det_unconstrained - l * scale.ln() - target;
    }
    Ok(DualUpdate {
        correlations,
        multipliers,
        residuals_before,
        residuals,
    })
}

/// Dual ascent with step sizes `1/k` until every active block satisfies
/// `|log det B_i − log det B| ≤ tol`, or `max_iters` steps per block.
///
/// Blocks are independent and each stops as soon as its own residual is
/// within tolerance; a block that starts feasible takes no steps.
pub fn diversify_complete(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
    common: &DMatrix<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<DualOutcome> {
    let g = layout.num_blocks();
    let l = layout.block_size() as f64;
    let target = log_det(common, "common correlation")?;
    let mut correlations = prior.correlations().to_vec();
    let mut multipliers = prior.multipliers().to_vec();
    let mut residuals = vec![0.0; g];
    let mut iterations = vec![0; g];
    let mut converged = true;
    for i in (0..g).filter(|&i| prior.is_active(i)) {
        let mut residual = log_det(prior.correlation(i), "correlation matrix")? - target;
        let mut lambda = multipliers[i];
        let mut scale_used = None;
        let mut k = 0;
        if residual.abs() > tol {
            let problem = block_problem(prior, posterior, layout, i)?;
            while residual.abs() > tol && k < max_iters {
                k += 1;
                let scale = 1.0 + 2.0 * lambda;
                lambda = clamp_multiplier(lambda + residual / k as f64);
                residual = problem.log_det_unconstrained - l * scale.ln() - target;
                scale_used = Some(scale);
            }
            if let Some(scale) = scale_used {
                correlations[i] = problem.unconstrained / scale;
            }
        }
        converged &= residual.abs() <= tol;
        multipliers[i] = lambda;
        residuals[i] = residual;
        iterations[i] = k;
    }
    Ok(DualOutcome {
        correlations,
        multipliers,
        residuals,
        iterations,
        converged,
    })
}
