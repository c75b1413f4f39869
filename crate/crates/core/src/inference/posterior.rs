//! Posterior moments, marginal likelihood and the noise-precision update.
//!
//! Everything is evaluated on the active blocks only through the Woodbury
//! form `Σ = Σ₀ − Σ₀Φᵀ(β⁻¹I + ΦΣ₀Φᵀ)⁻¹ΦΣ₀`, so `Σ₀` is never inverted.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, log_det_chol, symmetrize};
use crate::model::{BlockLayout, DiversifiedPrior, MeasurementModel, Posterior};

/// Prior covariance blocks of the active set, keyed by block index.
pub(crate) type ActiveBlocks = Vec<(usize, DMatrix<f64>)>;

pub(crate) fn active_blocks(prior: &DiversifiedPrior, layout: &BlockLayout) -> ActiveBlocks {
    (0..layout.num_blocks())
        .filter(|&i| prior.is_active(i))
        .map(|i| (i, prior.block_covariance(layout, i)))
        .collect()
}

struct Marginal {
    /// `Φ_a Σ₀_a`, `M × n_a`.
    phi_sigma0: DMatrix<f64>,
    /// Cholesky factor of `Σ_y = β⁻¹I + Φ_a Σ₀_a Φ_aᵀ`.
    chol: Cholesky<f64, Dyn>,
}

fn marginal(
    phi: &DMatrix<f64>,
    beta: f64,
    layout: &BlockLayout,
    blocks: &ActiveBlocks,
) -> Result<Marginal> {
    let m = phi.nrows();
    let l = layout.block_size();
    let n_a = blocks.len() * l;
    let mut phi_a = DMatrix::zeros(m, n_a);
    let mut phi_sigma0 = DMatrix::zeros(m, n_a);
    for (slot, (i, cov)) in blocks.iter().enumerate() {
        let src = phi.columns(i * l, l);
        phi_a.columns_mut(slot * l, l).copy_from(&src);
        phi_sigma0.columns_mut(slot * l, l).copy_from(&(src * cov));
    }
    let mut sigma_y = &phi_sigma0 * phi_a.transpose();
    for d in 0..m {
        sigma_y[(d, d)] += 1.0 / beta;
    }
    let sigma_y = symmetrize(sigma_y);
    let (chol, _) = cholesky_jittered(&sigma_y)
        .ok_or_else(|| Error::Domain("marginal covariance β⁻¹I + ΦΣ₀Φᵀ is singular".into()))?;
    Ok(Marginal { phi_sigma0, chol })
}

pub(crate) fn posterior_from_blocks(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: f64,
    layout: &BlockLayout,
    blocks: &ActiveBlocks,
) -> Result<Posterior> {
    let n = layout.total_dim();
    if blocks.is_empty() {
        return Ok(Posterior::zeros(n));
    }
    let l = layout.block_size();
    let Marginal { phi_sigma0, chol } = marginal(phi, beta, layout, blocks)?;
    let gain = chol.solve(&phi_sigma0);
    let mut sigma_a = -phi_sigma0.tr_mul(&gain);
    for (slot, (_, cov)) in blocks.iter().enumerate() {
        let mut view = sigma_a.view_mut((slot * l, slot * l), (l, l));
        view += cov;
    }
    let sigma_a = symmetrize(sigma_a);
    let mu_a = phi_sigma0.tr_mul(&chol.solve(y));

    let mut mean = DVector::zeros(n);
    let mut covariance = DMatrix::zeros(n, n);
    for (sa, (ia, _)) in blocks.iter().enumerate() {
        mean.rows_mut(ia * l, l).copy_from(&mu_a.rows(sa * l, l));
        for (sb, (ib, _)) in blocks.iter().enumerate() {
            covariance
                .view_mut((ia * l, ib * l), (l, l))
                .copy_from(&sigma_a.view((sa * l, sb * l), (l, l)));
        }
    }
    Posterior::new(mean, covariance)
}

/// Posterior `N(μ, Σ)` for prior covariance `sigma0` with the given active blocks.
///
/// Inactive blocks of `sigma0` are ignored and get zero mean and covariance.
pub fn compute_posterior(
    model: &MeasurementModel,
    sigma0: &DMatrix<f64>,
    layout: &BlockLayout,
    active_mask: &[bool],
) -> Result<Posterior> {
    let n = layout.total_dim();
    check_dims(model, layout)?;
    if sigma0.shape() != (n, n) || active_mask.len() != layout.num_blocks() {
        return Err(Error::Dimension(format!(
            "prior covariance must be {n}x{n} with one mask entry per block"
        )));
    }
    let l = layout.block_size();
    let blocks: ActiveBlocks = (0..layout.num_blocks())
        .filter(|&i| active_mask[i])
        .map(|i| (i, sigma0.view((i * l, i * l), (l, l)).into_owned()))
        .collect();
    posterior_from_blocks(model.phi(), model.y(), model.beta(), layout, &blocks)
}

pub(crate) fn check_dims(model: &MeasurementModel, layout: &BlockLayout) -> Result<()> {
    if model.signal_dim() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "design matrix has {} columns but layout covers {}",
            model.signal_dim(),
            layout.total_dim()
        )));
    }
    Ok(())
}

pub(crate) fn cost_from_blocks(
    phi: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: f64,
    layout: &BlockLayout,
    blocks: &ActiveBlocks,
) -> Result<f64> {
    if blocks.is_empty() {
        let m = y.len() as f64;
        return Ok(-beta * y.norm_squared() + m * beta.ln());
    }
    let mg = marginal(phi, beta, layout, blocks)?;
    Ok(-y.dot(&mg.chol.solve(y)) - log_det_chol(&mg.chol))
}

/// Log marginal likelihood (up to constants) `−yᵀΣ_y⁻¹y − log det Σ_y`
/// with `Σ_y = β⁻¹I + ΦΣ₀Φᵀ`, using the model's `β`.
pub fn cost(
    model: &MeasurementModel,
    prior: &DiversifiedPrior,
    layout: &BlockLayout,
) -> Result<f64> {
    check_dims(model, layout)?;
    cost_from_blocks(
        model.phi(),
        model.y(),
        model.beta(),
        layout,
        &active_blocks(prior, layout),
    )
}

/// Noise precision update `β = M / (‖y − Φμ‖² + tr(ΣΦᵀΦ))`, capped at `beta_max`.
pub fn update_beta(model: &MeasurementModel, posterior: &Posterior, beta_max: f64) -> f64 {
    let phi = model.phi();
    let sigma = posterior.covariance();
    let mu = posterior.mean();
    let active: Vec<usize> = (0..mu.len())
        .filter(|&j| sigma[(j, j)] > 0.0 || mu[j] != 0.0)
        .collect();
    let m = model.num_measurements();

    let mut residual = model.y().clone();
    for &j in &active {
        residual.axpy(-mu[j], &phi.column(j), 1.0);
    }
    let phi_a = phi.select_columns(&active);
    let sigma_a = DMatrix::from_fn(active.len(), active.len(), |a, b| {
        sigma[(active[a], active[b])]
    });
    let trace = (&phi_a * sigma_a).component_mul(&phi_a).sum();

    let denom = residual.norm_squared() + trace;
    let m = m as f64;
    if !denom.is_finite() || denom <= m / beta_max {
        beta_max
    } else {
        m / denom
    }
}
