//! Domain types: block layout, measurement model, the diversified prior and
//! the Gaussian posterior, plus block indexing and prior-covariance assembly.
//!
//! Blocks are indexed from zero. Block `i` covers elements
//! `i * L .. (i + 1) * L` of an `N = g * L` vector. Pruned blocks keep their
//! slot and are marked inactive, so indices never shift during a solve.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::all_finite;

/// Equal-size partition of an `N`-vector into `g` blocks of length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockLayout {
    num_blocks: usize,
    block_size: usize,
}

impl BlockLayout {
    pub fn new(num_blocks: usize, block_size: usize) -> Result<Self> {
        if num_blocks == 0 || block_size == 0 {
            return Err(Error::Layout(format!(
                "need positive block count and size, got g={num_blocks}, L={block_size}"
            )));
        }
        Ok(Self {
            num_blocks,
            block_size,
        })
    }

    /// Layout for a vector of length `total_dim` cut into blocks of `block_size`.
    pub fn for_dimension(total_dim: usize, block_size: usize) -> Result<Self> {
        if block_size == 0 || total_dim == 0 || total_dim % block_size != 0 {
            return Err(Error::Layout(format!(
                "dimension {total_dim} is not a positive multiple of block size {block_size}"
            )));
        }
        Self::new(total_dim / block_size, block_size)
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn total_dim(&self) -> usize {
        self.num_blocks * self.block_size
    }

    /// Element range of block `i`.
    pub fn range(&self, i: usize) -> Result<Range<usize>> {
        if i >= self.num_blocks {
            return Err(Error::BlockIndex {
                index: i,
                num_blocks: self.num_blocks,
            });
        }
        Ok(self.range_unchecked(i))
    }

    pub(crate) fn range_unchecked(&self, i: usize) -> Range<usize> {
        i * self.block_size..(i + 1) * self.block_size
    }

    pub fn block_of(&self, element: usize) -> usize {
        element / self.block_size
    }
}

/// Linear observation model `y = Φx + n` with `n ~ N(0, β⁻¹I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    phi: DMatrix<f64>,
    y: DVector<f64>,
    beta: f64,
}

impl MeasurementModel {
    pub fn new(phi: DMatrix<f64>, y: DVector<f64>, beta: f64) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::Dimension("design matrix must be non-empty".into()));
        }
        if phi.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "design matrix has {} rows but y has {} entries",
                phi.nrows(),
                y.len()
            )));
        }
        if !all_finite(&phi) {
            return Err(Error::NonFinite("design matrix"));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("measurements"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!(
                "noise precision must be positive, got {beta}"
            )));
        }
        Ok(Self { phi, y, beta })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_measurements(&self) -> usize {
        self.phi.nrows()
    }

    pub fn signal_dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.phi.clone(), self.y.clone(), beta)
    }
}

/// Hyperparameters of the diversified block prior.
///
/// Block `i` has covariance `G_i B_i G_i` with `G_i = diag(√γ_i1 .. √γ_iL)`.
/// `common_correlation` is the strongly-constrained average used as the
/// target of the log-determinant constraint, and `multipliers` are the dual
/// variables of that constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversifiedPrior {
    gammas: DVector<f64>,
    correlations: Vec<DMatrix<f64>>,
    common_correlation: DMatrix<f64>,
    multipliers: Vec<f64>,
    active: Vec<bool>,
}

impl DiversifiedPrior {
    pub fn new(
        layout: &BlockLayout,
        gammas: DVector<f64>,
        correlations: Vec<DMatrix<f64>>,
        common_correlation: DMatrix<f64>,
        multipliers: Vec<f64>,
        active: Vec<bool>,
    ) -> Result<Self> {
        let g = layout.num_blocks();
        let l = layout.block_size();
        if gammas.len() != layout.total_dim() {
            return Err(Error::Dimension(format!(
                "expected {} variances, got {}",
                layout.total_dim(),
                gammas.len()
            )));
        }
        if correlations.len() != g || multipliers.len() != g || active.len() != g {
            return Err(Error::Dimension(format!(
                "expected {g} correlation matrices, multipliers and mask entries"
            )));
        }
        if common_correlation.shape() != (l, l) || correlations.iter().any(|b| b.shape() != (l, l))
        {
            return Err(Error::Dimension(format!(
                "correlation matrices must be {l}x{l}"
            )));
        }
        if !gammas.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("variances"));
        }
        if gammas.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("variances must be non-negative".into()));
        }
        if !correlations.iter().all(all_finite) || !all_finite(&common_correlation) {
            return Err(Error::NonFinite("correlation matrices"));
        }
        if !multipliers.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("multipliers"));
        }
        for i in 0..g {
            let range = layout.range_unchecked(i);
            if !active[i] {
                if gammas.rows(range.start, l).iter().any(|&v| v != 0.0) {
                    return Err(Error::Domain(format!(
                        "pruned block {i} has non-zero variance"
                    )));
                }
                continue;
            }
            let b = &correlations[i];
            let asym = (b - b.transpose()).amax();
            if asym > 1e-9 * b.amax().max(1.0) {
                return Err(Error::Domain(format!(
                    "correlation matrix {i} is not symmetric"
                )));
            }
            if nalgebra::Cholesky::new(b.clone()).is_none() {
                return Err(Error::Domain(format!(
                    "correlation matrix {i} is not positive definite"
                )));
            }
            if 1.0 + 2.0 * multipliers[i] <= 0.0 {
                return Err(Error::Domain(format!("multiplier {i} violates 1 + 2λ > 0")));
            }
        }
        Ok(Self {
            gammas,
            correlations,
            common_correlation,
            multipliers,
            active,
        })
    }

    /// Identity correlations, zero multipliers, every block active.
    pub fn with_gammas(layout: &BlockLayout, gammas: DVector<f64>) -> Result<Self> {
        let l = layout.block_size();
        let g = layout.num_blocks();
        Self::new(
            layout,
            gammas,
            vec![DMatrix::identity(l, l); g],
            DMatrix::identity(l, l),
            vec![0.0; g],
            vec![true; g],
        )
    }

    pub fn gammas(&self) -> &DVector<f64> {
        &self.gammas
    }

    pub fn correlation(&self, i: usize) -> &DMatrix<f64> {
        &self.correlations[i]
    }

    pub fn correlations(&self) -> &[DMatrix<f64>] {
        &self.correlations
    }

    pub fn common_correlation(&self) -> &DMatrix<f64> {
        &self.common_correlation
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Number of non-zero variances.
    pub fn support_size(&self) -> usize {
        self.gammas.iter().filter(|&&v| v != 0.0).count()
    }

    pub(crate) fn block_gammas(&self, layout: &BlockLayout, i: usize) -> DVector<f64> {
        self.gammas
            .rows(i * layout.block_size(), layout.block_size())
            .into_owned()
    }

    /// `G_i B_i G_i` for block `i`.
    pub fn block_covariance(&self, layout: &BlockLayout, i: usize) -> DMatrix<f64> {
        let gammas = self.block_gammas(layout, i);
        let sqrt_g = gammas.map(f64::sqrt);
        let b = &self.correlations[i];
        // The diagonal uses γ directly so it is exact rather than (√γ)².
        DMatrix::from_fn(b.nrows(), b.ncols(), |s, k| {
            if s == k {
                b[(s, s)] * gammas[s]
            } else {
                b[(s, k)] * sqrt_g[s] * sqrt_g[k]
            }
        })
    }

    pub(crate) fn set_gammas(&mut self, gammas: DVector<f64>) {
        self.gammas = gammas;
    }

    pub(crate) fn set_correlations(&mut self, correlations: Vec<DMatrix<f64>>) {
        self.correlations = correlations;
    }

    pub(crate) fn set_common_correlation(&mut self, b: DMatrix<f64>) {
        self.common_correlation = b;
    }

    pub(crate) fn set_multipliers(&mut self, multipliers: Vec<f64>) {
        self.multipliers = multipliers;
    }

    pub(crate) fn deactivate(&mut self, layout: &BlockLayout, i: usize) {
        self.active[i] = false;
        let r = layout.range_unchecked(i);
        self.gammas.rows_mut(r.start, r.len()).fill(0.0);
    }
}

/// Gaussian posterior `N(μ, Σ)` of the signal given the measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl Posterior {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.shape() != (mean.len(), mean.len()) {
            return Err(Error::Dimension(format!(
                "covariance is {:?} but mean has {} entries",
                covariance.shape(),
                mean.len()
            )));
        }
        Ok(Self { mean, covariance })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mean: DVector::zeros(n),
            covariance: DMatrix::zeros(n, n),
        }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `Σ^i + μ^i (μ^i)ᵀ`, the second moment of block `i`.
    pub fn block_second_moment(&self, layout: &BlockLayout, i: usize) -> DMatrix<f64> {
        let r = layout.range_unchecked(i);
        let mu = self.mean.rows(r.start, r.len());
        self.covariance.view((r.start, r.start), (r.len(), r.len())) + mu * mu.transpose()
    }

    /// Zeroes the mean entries and covariance rows/columns of block `i`.
    pub(crate) fn clear_block(&mut self, layout: &BlockLayout, i: usize) {
        let r = layout.range_unchecked(i);
        self.mean.rows_mut(r.start, r.len()).fill(0.0);
        self.covariance.rows_mut(r.start, r.len()).fill(0.0);
        self.covariance.columns_mut(r.start, r.len()).fill(0.0);
    }
}

/// Returns the block-`i` slice of `v` and the matching diagonal block of `sigma`.
pub fn block_view(
    v: &DVector<f64>,
    sigma: &DMatrix<f64>,
    i: usize,
    layout: &BlockLayout,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = layout.total_dim();
    if v.len() != n || sigma.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "block view expects length-{n} inputs"
        )));
    }
    let r = layout.range(i)?;
    let l = r.len();
    Ok((
        v.rows(r.start, l).into_owned(),
        sigma.view((r.start, r.start), (l, l)).into_owned(),
    ))
}

/// Writes `block` into the block-`i` slots of `v` and the diagonal block of `sigma`.
pub fn set_block(
    v: &mut DVector<f64>,
    sigma: &mut DMatrix<f64>,
    i: usize,
    layout: &BlockLayout,
    block_mean: &DVector<f64>,
    block_cov: &DMatrix<f64>,
) -> Result<()> {
    let r = layout.range(i)?;
    let l = r.len();
    if block_mean.len() != l || block_cov.shape() != (l, l) {
        return Err(Error::Dimension(format!("block values must have size {l}")));
    }
    v.rows_mut(r.start, l).copy_from(block_mean);
    sigma
        .view_mut((r.start, r.start), (l, l))
        .copy_from(block_cov);
    Ok(())
}

/// Block-diagonal prior covariance `Σ₀ = diag(G_1B_1G_1, …, G_gB_gG_g)`.
///
/// Pruned blocks contribute zero blocks.
pub fn assemble_prior_covariance(
    prior: &DiversifiedPrior,
    layout: &BlockLayout,
) -> Result<DMatrix<f64>> {
    let n = layout.total_dim();
    if prior.gammas.len() != n {
        return Err(Error::Dimension(format!(
            "prior has {} variances, layout needs {n}",
            prior.gammas.len()
        )));
    }
    if !prior.gammas.iter().all(|v| v.is_finite()) || !prior.correlations.iter().all(all_finite) {
        return Err(Error::NonFinite("prior hyperparameters"));
    }
    let l = layout.block_size();
    let mut sigma0 = DMatrix::zeros(n, n);
    for i in 0..layout.num_blocks() {
        if !prior.active[i] {
            continue;
        }
        let start = i * l;
        sigma0
            .view_mut((start, start), (l, l))
            .copy_from(&prior.block_covariance(layout, i));
    }
    Ok(sigma0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn block_view_picks_second_block() {
        let layout = BlockLayout::new(2, 2).unwrap();
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let (mu, _) = block_view(&v, &DMatrix::zeros(4, 4), 1, &layout).unwrap();
        assert_eq!(mu.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn block_view_scalar_block() {
        let layout = BlockLayout::new(2, 1).unwrap();
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 6.0]));
        let (_, s) = block_view(&DVector::zeros(2), &sigma, 0, &layout).unwrap();
        assert_eq!(s, DMatrix::from_element(1, 1, 5.0));
    }

    #[test]
    fn block_view_identity_block() {
        let layout = BlockLayout::new(2, 3).unwrap();
        let mut sigma = DMatrix::from_element(6, 6, 0.25);
        sigma
            .view_mut((3, 3), (3, 3))
            .copy_from(&DMatrix::identity(3, 3));
        let (_, s) = block_view(&DVector::zeros(6), &sigma, 1, &layout).unwrap();
        assert_eq!(s, DMatrix::identity(3, 3));
    }

    #[test]
    fn block_view_rejects_bad_index() {
        let layout = BlockLayout::new(2, 2).unwrap();
        let err = block_view(&DVector::zeros(4), &DMatrix::zeros(4, 4), 2, &layout).unwrap_err();
        assert!(matches!(
            err,
            Error::BlockIndex {
                index: 2,
                num_blocks: 2
            }
        ));
    }

    #[test]
    fn layout_requires_divisible_dimension() {
        assert!(BlockLayout::for_dimension(10, 3).is_err());
        let l = BlockLayout::for_dimension(12, 3).unwrap();
        assert_eq!((l.num_blocks(), l.block_size(), l.total_dim()), (4, 3, 12));
        assert_eq!(l.range(3).unwrap(), 9..12);
    }

    #[test]
    fn identity_correlation_gives_diagonal_prior() {
        let layout = BlockLayout::new(3, 2).unwrap();
        let gammas = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let prior = DiversifiedPrior::with_gammas(&layout, gammas.clone()).unwrap();
        let s0 = assemble_prior_covariance(&prior, &layout).unwrap();
        assert_eq!(s0, DMatrix::from_diagonal(&gammas));
    }

    #[test]
    fn correlated_block_matches_hand_evaluation() {
        // rho * sqrt(1) * sqrt(4) = 0.5 * 2 = 1
        let layout = BlockLayout::new(1, 2).unwrap();
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let prior = DiversifiedPrior::new(
            &layout,
            DVector::from_vec(vec![1.0, 4.0]),
            vec![b.clone()],
            b,
            vec![0.0],
            vec![true],
        )
        .unwrap();
        let s0 = assemble_prior_covariance(&prior, &layout).unwrap();
        assert_relative_eq!(
            s0,
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 4.0]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn pruned_block_contributes_zeros() {
        let layout = BlockLayout::new(2, 2).unwrap();
        let mut prior =
            DiversifiedPrior::with_gammas(&layout, DVector::from_element(4, 3.0)).unwrap();
        prior.deactivate(&layout, 0);
        let s0 = assemble_prior_covariance(&prior, &layout).unwrap();
        assert!(s0.view((0, 0), (2, 2)).iter().all(|&v| v == 0.0));
        assert_eq!(s0[(2, 2)], 3.0);
    }

    #[test]
    fn prior_validation_rejects_bad_inputs() {
        let layout = BlockLayout::new(1, 2).unwrap();
        let id = DMatrix::identity(2, 2);
        let nan = DVector::from_vec(vec![f64::NAN, 1.0]);
        assert!(matches!(
            DiversifiedPrior::new(
                &layout,
                nan,
                vec![id.clone()],
                id.clone(),
                vec![0.0],
                vec![true]
            ),
            Err(Error::NonFinite(_))
        ));
        let neg_def = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(DiversifiedPrior::new(
            &layout,
            DVector::from_element(2, 1.0),
            vec![neg_def],
            id.clone(),
            vec![0.0],
            vec![true]
        )
        .is_err());
        assert!(DiversifiedPrior::new(
            &layout,
            DVector::from_element(2, 1.0),
            vec![id.clone()],
            id,
            vec![-0.6],
            vec![true]
        )
        .is_err());
    }

    #[test]
    fn measurement_model_validation() {
        let phi = DMatrix::from_element(2, 3, 1.0);
        assert!(MeasurementModel::new(phi.clone(), DVector::zeros(3), 1.0).is_err());
        assert!(MeasurementModel::new(phi.clone(), DVector::zeros(2), 0.0).is_err());
        let mut bad = phi.clone();
        bad[(0, 0)] = f64::INFINITY;
        assert!(matches!(
            MeasurementModel::new(bad, DVector::zeros(2), 1.0),
            Err(Error::NonFinite(_))
        ));
        assert!(MeasurementModel::new(phi, DVector::zeros(2), 1.0).is_ok());
    }
}
