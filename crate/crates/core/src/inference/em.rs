//! M-step quantities for the variances and correlation matrices.
//!
//! For block `i` write `S_i = Σ^i + μ^i(μ^i)ᵀ`. The expected complete-data
//! log prior is
//!
//! ```text
//! Q = Σ_i [ −½ log|G_i B_i G_i| − ½ tr((G_i B_i G_i)⁻¹ S_i) ]
//! ```
//!
//! and its derivative in `√γ_ij` is `−1/√γ + A_ij/γ^{3/2} + T_ij/γ` with
//!
//! ```text
//! A_ij = (B_i⁻¹)_jj (S_i)_jj
//! T_ij = Σ_{k≠j} (B_i⁻¹)_jk (S_i)_kj / √γ_ik
//! ```
//!
//! The `k = j` term is dropped from `T_ij` (the reciprocal of the zeroed
//! diagonal entry is taken as zero), so `T_ij = 0` whenever `B_i = I`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, spd_log_det, symmetrize};
use crate::model::{BlockLayout, DiversifiedPrior, Posterior};

/// Floor applied to `A_ij` before the closed-form variance update.
pub const A_FLOOR: f64 = 1e-16;

fn inverse_correlation(prior: &DiversifiedPrior, i: usize) -> Result<DMatrix<f64>> {
    spd_inverse(prior.correlation(i))
        .ok_or_else(|| Error::Domain(format!("correlation matrix {i} is not positive definite")))
}

/// `(T_ij, A_ij)` for one element, given `B_i⁻¹`, `S_i` and `√γ_i`.
pub(crate) fn coupling_terms(
    binv: &DMatrix<f64>,
    s: &DMatrix<f64>,
    sqrt_gamma: &DVector<f64>,
    j: usize,
) -> (f64, f64) {
    let a = binv[(j, j)] * s[(j, j)];
    let t = (0..sqrt_gamma.len())
        .filter(|&k| k != j && sqrt_gamma[k] != 0.0)
        .map(|k| binv[(j, k)] * s[(k, j)] / sqrt_gamma[k])
        .sum();
    (t, a)
}

/// Positive root of `−γ + T√γ + A = 0` in `√γ`, squared.
///
/// Algebraically equal to `4A² / (√(T² + 4A) − T)²`; the branch keeps the
/// subtraction away from cancellation.
pub fn stationary_gamma(t: f64, a: f64) -> f64 {
    let s = (t * t + 4.0 * a).sqrt();
    let root = if t >= 0.0 {
        0.5 * (t + s)
    } else {
        2.0 * a / (s - t)
    };
    root * root
}

/// Value of `Q` restricted to the active blocks.
pub fn q_value(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
) -> Result<f64> {
    let mut total = 0.0;
    for i in (0..layout.num_blocks()).filter(|&i| prior.is_active(i)) {
        let gammas = prior.block_gammas(layout, i);
        if gammas.iter().any(|&v| v <= 0.0) {
            return Err(Error::Domain(format!(
                "active block {i} has a zero variance"
            )));
        }
        let cov = prior.block_covariance(layout, i);
        let log_det = spd_log_det(&cov)
            .ok_or_else(|| Error::Domain(format!("block {i} covariance is singular")))?;
        let inv = spd_inverse(&cov)
            .ok_or_else(|| Error::Domain(format!("block {i} covariance is singular")))?;
        let s = posterior.block_second_moment(layout, i);
        total += -0.5 * log_det - 0.5 * inv.component_mul(&s).sum();
    }
    Ok(total)
}

/// Analytic `∂Q/∂√γ_ij` for element `j` of block `i`.
pub fn q_grad_sqrt_gamma(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
    i: usize,
    j: usize,
) -> Result<f64> {
    layout.range(i)?;
    if j >= layout.block_size() {
        return Err(Error::Domain(format!(
            "element {j} outside block of size {}",
            layout.block_size()
        )));
    }
    let sqrt_gamma = prior.block_gammas(layout, i).map(f64::sqrt);
    let g = sqrt_gamma[j];
    if g <= 0.0 {
        return Err(Error::Domain(format!("γ[{i},{j}] must be positive")));
    }
    let binv = inverse_correlation(prior, i)?;
    let s = posterior.block_second_moment(layout, i);
    let (t, a) = coupling_terms(&binv, &s, &sqrt_gamma, j);
    Ok(-1.0 / g + a / (g * g * g) + t / (g * g))
}

/// Closed-form variance update for every element of every active block.
///
/// Each `γ_ij` zeroes `∂Q/∂√γ_ij` with `T_ij` and `A_ij` evaluated at the
/// incoming variances. Pruned blocks stay at zero.
pub fn update_gamma(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
) -> Result<DVector<f64>> {
    let l = layout.block_size();
    let mut gammas = DVector::zeros(layout.total_dim());
    for i in (0..layout.num_blocks()).filter(|&i| prior.is_active(i)) {
        let binv = inverse_correlation(prior, i)?;
        let s = posterior.block_second_moment(layout, i);
        let sqrt_gamma = prior.block_gammas(layout, i).map(f64::sqrt);
        for j in 0..l {
            let (t, a) = coupling_terms(&binv, &s, &sqrt_gamma, j);
            gammas[i * l + j] = stationary_gamma(t, a.max(A_FLOOR));
        }
    }
    Ok(gammas)
}

/// `G_i⁻¹ S_i G_i⁻¹`, the unconstrained maximizer of `Q` in `B_i`.
pub fn unconstrained_correlation(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
    i: usize,
) -> Result<DMatrix<f64>> {
    layout.range(i)?;
    let gammas = prior.block_gammas(layout, i);
    if gammas.iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(format!("block {i} has a zero variance")));
    }
    let inv_sqrt = gammas.map(|v| 1.0 / v.sqrt());
    let s = posterior.block_second_moment(layout, i);
    let u = DMatrix::from_fn(s.nrows(), s.ncols(), |a, b| {
        s[(a, b)] * inv_sqrt[a] * inv_sqrt[b]
    });
    Ok(symmetrize(u))
}

/// Average of the unconstrained correlation matrices over the active blocks.
pub fn compute_common_correlation(
    prior: &DiversifiedPrior,
    posterior: &Posterior,
    layout: &BlockLayout,
) -> Result<DMatrix<f64>> {
    let l = layout.block_size();
    let mut sum = DMatrix::zeros(l, l);
    let mut count = 0usize;
    for i in (0..layout.num_blocks()).filter(|&i| prior.is_active(i)) {
        sum += unconstrained_correlation(prior, posterior, layout, i)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Domain("no active blocks".into()));
    }
    Ok(sum / count as f64)
}
