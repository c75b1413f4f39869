//! Reconstruction quality measures and posterior summaries.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::Posterior;

/// Default NMSE level below which a trial counts as a success.
pub const SUCCESS_THRESHOLD: f64 = 1e-2;

/// Relative energy an estimated block needs to count as detected.
pub const HIT_ENERGY_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub nmse: f64,
    pub corr: f64,
    pub block_hit_rate: f64,
    pub support_size: usize,
    pub success: bool,
}

impl TrialMetrics {
    pub fn evaluate(
        x_hat: &DVector<f64>,
        x_true: &DVector<f64>,
        support_blocks: &[(usize, usize)],
        support_size: usize,
        threshold: f64,
    ) -> Result<Self> {
        let nmse = nmse(x_hat, x_true)?;
        Ok(Self {
            nmse,
            corr: corr(x_hat, x_true)?.value,
            block_hit_rate: block_hit_rate(x_hat, support_blocks)?,
            support_size,
            success: phase_success(nmse, threshold),
        })
    }
}

/// `‖x̂ − x‖² / ‖x‖²`.
pub fn nmse(x_hat: &DVector<f64>, x_true: &DVector<f64>) -> Result<f64> {
    same_len(x_hat, x_true)?;
    let energy = x_true.norm_squared();
    if energy == 0.0 {
        return Err(Error::Domain(
            "NMSE is undefined for a zero reference signal".into(),
        ));
    }
    Ok((x_hat - x_true).norm_squared() / energy)
}

/// Cosine similarity. `degenerate` is set (and the value is 0) when either
/// vector is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

pub fn corr(x_hat: &DVector<f64>, x_true: &DVector<f64>) -> Result<Correlation> {
    same_len(x_hat, x_true)?;
    let denom = x_hat.norm() * x_true.norm();
    if denom == 0.0 {
        return Ok(Correlation {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Correlation {
        value: (x_hat.dot(x_true) / denom).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Marginal Gaussian intervals `μ_j ± z √Σ_jj` at the given two-sided level.
pub fn credible_interval(posterior: &Posterior, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
    let cov = posterior.covariance();
    Ok(posterior
        .mean()
        .iter()
        .enumerate()
        .map(|(j, &mu)| {
            let half = z * cov[(j, j)].max(0.0).sqrt();
            (mu - half, mu + half)
        })
        .collect())
}

/// Strict `nmse < threshold`.
pub fn phase_success(nmse_value: f64, threshold: f64) -> bool {
    nmse_value < threshold
}

/// Fraction of true blocks whose estimated energy exceeds
/// `1e-4 · ‖x̂‖²`. An empty support gives 1.
pub fn block_hit_rate(x_hat: &DVector<f64>, support_blocks: &[(usize, usize)]) -> Result<f64> {
    if support_blocks.is_empty() {
        return Ok(1.0);
    }
    let floor = HIT_ENERGY_FRACTION * x_hat.norm_squared();
    let mut hits = 0;
    for &(start, len) in support_blocks {
        if start + len > x_hat.len() {
            return Err(Error::Dimension(format!(
                "block ({start}, {len}) exceeds signal length {}",
                x_hat.len()
            )));
        }
        let energy = x_hat.rows(start, len).norm_squared();
        if energy > floor && energy > 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / support_blocks.len() as f64)
}

/// Support size against the `√M` bound expected of exact local minima.
/// Only a diagnostic: EM stops short of exact minima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityDiagnostic {
    pub support_size: usize,
    pub bound: f64,
    pub exceeds: bool,
}

pub fn sparsity_diagnostic(support_size: usize, measurements: usize) -> SparsityDiagnostic {
    let bound = (measurements as f64).sqrt();
    SparsityDiagnostic {
        support_size,
        bound,
        exceeds: support_size as f64 > bound,
    }
}

/// Square root of NMSE, the convention used for image tables.
pub fn root_nmse(nmse_value: f64) -> f64 {
    nmse_value.sqrt()
}

fn same_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}
