//! Reference algorithms: classic SBL (one variance per element, no
//! correlation) and BSBL with a single correlation matrix shared by all
//! blocks. Their variance updates are written out independently of
//! [`crate::inference::update_gamma`] so they can serve as oracles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{CorrelationMode, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::inference::posterior::{
    active_blocks, check_dims, cost_from_blocks, posterior_from_blocks, update_beta,
};
use crate::inference::prune::{prune, prune_level};
use crate::inference::solve;
use crate::inference::toeplitz::toeplitz_correct;
use crate::linalg::{spd_inverse, spd_repair};
use crate::model::{BlockLayout, DiversifiedPrior, MeasurementModel, Posterior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ClassicSbl,
    BsblStrong,
}

impl BaselineKind {
    pub fn solve(
        self,
        model: &MeasurementModel,
        layout: &BlockLayout,
        config: &SolverConfig,
    ) -> Result<SolveResult> {
        match self {
            Self::ClassicSbl => classic_sbl_solve(model, config),
            Self::BsblStrong => bsbl_strong_solve(model, layout, config),
        }
    }
}

/// One classic SBL EM step: `γ_j ← Σ_jj + μ_j²` with `(μ, Σ)` the posterior
/// under `Σ₀ = diag(γ)` and noise precision `β`.
pub fn sbl_reference_step(
    model: &MeasurementModel,
    gammas: &DVector<f64>,
    beta: f64,
) -> Result<DVector<f64>> {
    let phi = model.phi();
    if gammas.len() != phi.ncols() {
        return Err(Error::Dimension(format!(
            "expected {} variances, got {}",
            phi.ncols(),
            gammas.len()
        )));
    }
    if gammas.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "variances must be finite and non-negative".into(),
        ));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "noise precision must be positive, got {beta}"
        )));
    }
    // Σ_y = β⁻¹I + ΦΓΦᵀ; Σ = Γ − ΓΦᵀΣ_y⁻¹ΦΓ; μ = ΓΦᵀΣ_y⁻¹y
    let phi_gamma = DMatrix::from_fn(phi.nrows(), phi.ncols(), |r, c| phi[(r, c)] * gammas[c]);
    let sigma_y = &phi_gamma * phi.transpose() + DMatrix::identity(phi.nrows(), phi.nrows()) / beta;
    let chol = nalgebra::Cholesky::new(sigma_y)
        .ok_or_else(|| Error::Domain("marginal covariance is not positive definite".into()))?;
    let mu = phi_gamma.tr_mul(&chol.solve(model.y()));
    let gain = chol.solve(&phi_gamma);
    Ok(DVector::from_fn(gammas.len(), |j, _| {
        let sigma_jj = gammas[j] - phi_gamma.column(j).dot(&gain.column(j));
        sigma_jj.max(0.0) + mu[j] * mu[j]
    }))
}

/// Classic SBL: the diversified model with unit blocks and identity
/// correlations. Pruning, convergence and noise learning follow `config`.
pub fn classic_sbl_solve(model: &MeasurementModel, config: &SolverConfig) -> Result<SolveResult> {
    let layout = BlockLayout::new(model.signal_dim(), 1)?;
    let config = SolverConfig {
        correlation: CorrelationMode::Identity,
        toeplitz_enabled: false,
        ..config.clone()
    };
    solve(model, &layout, &config)
}

/// Block SBL with one scalar variance per block and a single correlation
/// matrix `B` shared by all blocks.
///
/// Per iteration: `γ_i ← tr(B⁻¹ S_i) / L`, then `B ← mean_i S_i / γ_i`
/// (Toeplitz-corrected when enabled), with the same pruning, posterior,
/// noise and stopping rules as the diversified solver.
pub fn bsbl_strong_solve(
    model: &MeasurementModel,
    layout: &BlockLayout,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    check_dims(model, layout)?;
    let (g, l) = (layout.num_blocks(), layout.block_size());
    let init = config.initial_gammas(layout.total_dim());
    let block_scale: Vec<f64> = (0..g).map(|i| init.rows(i * l, l).mean()).collect();
    let mut prior = DiversifiedPrior::with_gammas(
        layout,
        DVector::from_fn(layout.total_dim(), |k, _| block_scale[k / l]),
    )?;
    let mut beta = config
        .beta_init
        .unwrap_or(model.beta())
        .min(config.beta_max);
    let mut posterior = posterior_from_blocks(
        model.phi(),
        model.y(),
        beta,
        layout,
        &active_blocks(&prior, layout),
    )?;
    let mut shared = DMatrix::identity(l, l);
    let mut cost_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters && !converged {
        iterations += 1;
        let previous_mean = posterior.mean().clone();
        let level = prune_level(&prior, layout, config.prune_threshold, config.prune_floor);
        prune(&mut prior, &mut posterior, layout, level);
        let active: Vec<usize> = (0..g).filter(|&i| prior.is_active(i)).collect();
        if active.is_empty() {
            posterior = Posterior::zeros(layout.total_dim());
            cost_trace.push(cost_from_blocks(
                model.phi(),
                model.y(),
                beta,
                layout,
                &Vec::new(),
            )?);
            converged = true;
            break;
        }

        let shared_inv = spd_inverse(&shared)
            .ok_or_else(|| Error::Domain("shared correlation is singular".into()))?;
        let mut gammas = DVector::zeros(layout.total_dim());
        let mut sum = DMatrix::zeros(l, l);
        for &i in &active {
            let s = posterior.block_second_moment(layout, i);
            let gamma = (shared_inv.component_mul(&s).sum() / l as f64).max(f64::MIN_POSITIVE);
            gammas.rows_mut(i * l, l).fill(gamma);
            sum += s / gamma;
        }
        let mean = sum / active.len() as f64;
        shared = if config.toeplitz_enabled {
            toeplitz_correct(&mean, config.r_clamp)
        } else {
            spd_repair(mean)
        };
        let correlations = vec![shared.clone(); g];
        prior = DiversifiedPrior::new(
            layout,
            gammas,
            correlations,
            shared.clone(),
            vec![0.0; g],
            prior.active_mask().to_vec(),
        )?;

        let blocks = active_blocks(&prior, layout);
        posterior = posterior_from_blocks(model.phi(), model.y(), beta, layout, &blocks)?;
        if !posterior.mean().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("posterior mean"));
        }
        if config.learn_beta {
            beta = update_beta(model, &posterior, config.beta_max);
        }
        cost_trace.push(cost_from_blocks(
            model.phi(),
            model.y(),
            beta,
            layout,
            &blocks,
        )?);
        converged = (posterior.mean() - previous_mean).amax() < config.conv_tol;
    }

    Ok(SolveResult {
        x_hat: posterior.mean().clone(),
        posterior,
        prior,
        beta,
        iterations,
        cost_trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_sbl_step() {
        let model =
            MeasurementModel::new(DMatrix::identity(1, 1), DVector::from_element(1, 2.0), 1.0)
                .unwrap();
        let next = sbl_reference_step(&model, &DVector::from_element(1, 1.0), 1.0).unwrap();
        assert_relative_eq!(next[0], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_data_shrinks() {
        let phi = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]);
        let model = MeasurementModel::new(phi, DVector::zeros(2), 1.0).unwrap();
        let mut gamma = DVector::from_element(3, 1.0);
        for _ in 0..5 {
            let next = sbl_reference_step(&model, &gamma, 1.0).unwrap();
            assert!(next
                .iter()
                .zip(gamma.iter())
                .all(|(a, b)| *a > 0.0 && a < b));
            gamma = next;
        }
    }

    #[test]
    fn bsbl_variances_are_blockwise_constant() {
        let phi = crate::datagen::gen_design_matrix(20, 40, 3).unwrap();
        let mut x = DVector::zeros(40);
        x.rows_mut(8, 4).copy_from_slice(&[1.0, 2.0, -1.0, 0.5]);
        let model = MeasurementModel::new(phi.clone(), &phi * &x, 1e6).unwrap();
        let layout = BlockLayout::new(10, 4).unwrap();
        let cfg = SolverConfig {
            max_iters: 50,
            learn_beta: false,
            ..Default::default()
        };
        let res = bsbl_strong_solve(&model, &layout, &cfg).unwrap();
        for i in 0..10 {
            let block = res.prior.gammas().rows(i * 4, 4);
            assert!(block.iter().all(|&v| v == block[0]));
        }
        assert!(!res.prior.is_active(0), "empty block should be pruned");
        assert!(res.prior.is_active(2));
    }
}
