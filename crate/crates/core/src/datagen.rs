//! Synthetic block-sparse instances.
//!
//! Every generator is a pure function of its inputs and seed. Randomness
//! comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), which is
//! portable across platforms.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// One variance shared by all blocks.
    Homoscedastic,
    /// An independent variance per block.
    #[default]
    Heteroscedastic,
}

/// Requested block count must satisfy `K₀ < (M + 1) / (2L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub measurements: usize,
    pub block_size: usize,
}

impl RegimeCheck {
    pub fn holds(&self, num_blocks: usize) -> bool {
        2 * self.block_size * num_blocks < self.measurements + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub dim: usize,
    pub num_blocks: usize,
    /// Inclusive range of block lengths.
    pub block_size_range: (usize, usize),
    pub variance_mode: VarianceMode,
    /// Range the block variances are drawn from, uniformly.
    pub variance_range: (f64, f64),
    /// Block starts and lengths are multiples of this.
    pub alignment: usize,
    pub regime: Option<RegimeCheck>,
    pub seed: u64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            dim: 162,
            num_blocks: 3,
            block_size_range: (10, 60),
            variance_mode: VarianceMode::Heteroscedastic,
            variance_range: (0.1, 10.0),
            alignment: 1,
            regime: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_true: Vec<f64>,
    /// `(start, length)` of every non-zero block, in increasing order of start.
    pub support_blocks: Vec<(usize, usize)>,
    /// Variance of each entry of the matching support block.
    pub per_block_variance: Vec<f64>,
}

impl GroundTruth {
    pub fn x(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x_true)
    }
}

/// Standard Gaussian `M × N` matrix with unit-norm columns.
pub fn gen_design_matrix(m: usize, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::Spec(
            "design matrix needs at least one row and column".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in phi.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            col[0] = 1.0;
        }
    }
    Ok(phi)
}

fn validate(spec: &SignalSpec) -> Result<()> {
    let (lo, hi) = spec.block_size_range;
    let a = spec.alignment;
    if a == 0 || lo == 0 || lo > hi {
        return Err(Error::Spec(format!(
            "invalid block size range [{lo}, {hi}] or alignment {a}"
        )));
    }
    if spec.dim % a != 0 || lo.div_ceil(a) * a > hi {
        return Err(Error::Spec(format!(
            "no block length in [{lo}, {hi}] fits alignment {a} and dimension {}",
            spec.dim
        )));
    }
    let (vlo, vhi) = spec.variance_range;
    if !(vlo > 0.0 && vlo <= vhi && vhi.is_finite()) {
        return Err(Error::Spec(format!(
            "invalid variance range [{vlo}, {vhi}]"
        )));
    }
    if spec.num_blocks * lo.div_ceil(a) * a > spec.dim {
        return Err(Error::Spec(format!(
            "{} blocks of length at least {lo} cannot fit in dimension {}",
            spec.num_blocks, spec.dim
        )));
    }
    if let Some(regime) = spec.regime {
        if !regime.holds(spec.num_blocks) {
            return Err(Error::Spec(format!(
                "{} blocks violate K₀ < (M + 1) / 2L for M = {}, L = {}",
                spec.num_blocks, regime.measurements, regime.block_size
            )));
        }
    }
    Ok(())
}

/// Draws block lengths (in alignment units) until they fit.
fn draw_lengths(spec: &SignalSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let a = spec.alignment;
    let (lo, hi) = (
        spec.block_size_range.0.div_ceil(a),
        spec.block_size_range.1 / a,
    );
    let units = spec.dim / a;
    loop {
        let lengths: Vec<usize> = (0..spec.num_blocks)
            .map(|_| rng.random_range(lo..=hi))
            .collect();
        if lengths.iter().sum::<usize>() <= units {
            return lengths;
        }
    }
}

/// Uniform non-overlapping placement: the free space is split into
/// `K₀ + 1` gaps by a uniformly random composition.
fn place(lengths: &[usize], units: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = lengths.len();
    let free = units - lengths.iter().sum::<usize>();
    let mut bars = rand::seq::index::sample(rng, free + k, k).into_vec();
    bars.sort_unstable();
    let mut starts = Vec::with_capacity(k);
    let mut used = 0;
    for (slot, (&bar, &len)) in bars.iter().zip(lengths).enumerate() {
        let start = bar - slot + used;
        starts.push(start);
        used += len;
    }
    starts
}

/// Block-sparse signal with i.i.d. Gaussian amplitudes inside each block.
pub fn gen_block_sparse(spec: &SignalSpec) -> Result<GroundTruth> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = spec.alignment;
    let mut lengths = draw_lengths(spec, &mut rng);
    lengths.shuffle(&mut rng);
    let starts = place(&lengths, spec.dim / a, &mut rng);

    let (vlo, vhi) = spec.variance_range;
    let draw_variance = |rng: &mut ChaCha8Rng| {
        if vlo == vhi {
            vlo
        } else {
            rng.random_range(vlo..=vhi)
        }
    };
    let shared = draw_variance(&mut rng);
    let mut x = vec![0.0; spec.dim];
    let mut support_blocks = Vec::with_capacity(spec.num_blocks);
    let mut per_block_variance = Vec::with_capacity(spec.num_blocks);
    for (&start, &len) in starts.iter().zip(&lengths) {
        let variance = match spec.variance_mode {
            VarianceMode::Homoscedastic => shared,
            VarianceMode::Heteroscedastic => draw_variance(&mut rng),
        };
        let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Spec(e.to_string()))?;
        for v in &mut x[start * a..(start + len) * a] {
            *v = normal.sample(&mut rng);
        }
        support_blocks.push((start * a, len * a));
        per_block_variance.push(variance);
    }
    Ok(GroundTruth {
        x_true: x,
        support_blocks,
        per_block_variance,
    })
}

/// Adds white Gaussian noise at the requested SNR. Returns the noisy vector
/// and the true noise precision `1/σ²`, `σ² = ‖y‖² / (M · 10^{snr/10})`.
pub fn add_noise(y_clean: &DVector<f64>, snr_db: f64, seed: u64) -> Result<(DVector<f64>, f64)> {
    let energy = y_clean.norm_squared();
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Domain(
            "cannot set an SNR for a zero or non-finite signal".into(),
        ));
    }
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!("SNR must be finite, got {snr_db}")));
    }
    let variance = energy / (y_clean.len() as f64 * 10f64.powf(snr_db / 10.0));
    let sd = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = y_clean.map(|v| v + sd * rng.sample::<f64, _>(StandardNormal));
    Ok((y, 1.0 / variance))
}

/// Orthonormal synthesis basis `Ψ` of the type-II DCT: column `k` is the
/// `k`-th cosine atom, so `x = Ψw` maps DCT coefficients to the signal.
pub fn dct_basis(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Spec("DCT size must be positive".into()));
    }
    let nf = n as f64;
    Ok(DMatrix::from_fn(n, n, |t, k| {
        let scale = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        scale * (std::f64::consts::PI * (t as f64 + 0.5) * k as f64 / nf).cos()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn design_matrix_columns_are_unit() {
        let phi = gen_design_matrix(20, 80, 1).unwrap();
        for c in phi.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(gen_design_matrix(1, 1, 5).unwrap()[(0, 0)].abs(), 1.0);
        assert_eq!(phi, gen_design_matrix(20, 80, 1).unwrap());
    }

    #[test]
    fn fixed_size_blocks() {
        for seed in 0..2 {
            let spec = SignalSpec {
                num_blocks: 2,
                block_size_range: (6, 6),
                seed,
                ..Default::default()
            };
            let truth = gen_block_sparse(&spec).unwrap();
            assert_eq!(truth.x_true.iter().filter(|&&v| v != 0.0).count(), 12);
            assert!(truth.support_blocks.iter().all(|&(_, len)| len == 6));
            let (a, b) = (truth.support_blocks[0], truth.support_blocks[1]);
            assert!(a.0 + a.1 <= b.0);
        }
    }

    #[test]
    fn empty_support_and_infeasible_packing() {
        let spec = SignalSpec {
            num_blocks: 0,
            ..Default::default()
        };
        assert!(gen_block_sparse(&spec)
            .unwrap()
            .x_true
            .iter()
            .all(|&v| v == 0.0));
        let spec = SignalSpec {
            num_blocks: 4,
            block_size_range: (50, 60),
            ..Default::default()
        };
        assert!(matches!(gen_block_sparse(&spec), Err(Error::Spec(_))));
    }

    #[test]
    fn aligned_blocks_and_regime() {
        let regime = RegimeCheck {
            measurements: 40,
            block_size: 4,
        };
        let spec = SignalSpec {
            dim: 80,
            num_blocks: 2,
            block_size_range: (4, 4),
            alignment: 4,
            regime: Some(regime),
            ..Default::default()
        };
        let truth = gen_block_sparse(&spec).unwrap();
        assert!(truth
            .support_blocks
            .iter()
            .all(|&(s, l)| s % 4 == 0 && l == 4));
        // 2·4·6 = 48 ≥ 41
        let bad = SignalSpec {
            num_blocks: 6,
            ..spec
        };
        assert!(gen_block_sparse(&bad).is_err());
    }

    #[test]
    fn noise_limits() {
        let y = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let (noisy, beta) = add_noise(&y, 1e6, 3).unwrap();
        assert!((&noisy - &y).norm() / y.norm() < 1e-6);
        assert!(beta > 1e6);
        assert_eq!(
            add_noise(&y, 20.0, 9).unwrap(),
            add_noise(&y, 20.0, 9).unwrap()
        );
        assert!(add_noise(&DVector::zeros(3), 20.0, 0).is_err());
    }

    #[test]
    fn dct_is_orthonormal() {
        assert_eq!(dct_basis(1).unwrap(), DMatrix::identity(1, 1));
        let psi = dct_basis(480).unwrap();
        let resid = (psi.transpose() * &psi - DMatrix::identity(480, 480)).amax();
        assert!(resid < 1e-10, "{resid}");
        let w = psi.transpose() * DVector::from_element(16, 1.0).resize_vertically(480, 1.0);
        assert_relative_eq!(w[0].abs(), 480f64.sqrt(), epsilon = 1e-9);
        assert!(w.rows(1, 479).amax() < 1e-9);
    }
}
