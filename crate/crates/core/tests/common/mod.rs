#![allow(dead_code)]

use divsbl_core::inference::compute_posterior;
use divsbl_core::{
    assemble_prior_covariance, BlockLayout, DiversifiedPrior, MeasurementModel, Posterior,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random SPD matrix with unit diagonal and a condition number kept moderate.
pub fn random_correlation(rng: &mut ChaCha8Rng, l: usize) -> DMatrix<f64> {
    let a = gaussian_matrix(rng, l, l);
    let c = &a * a.transpose() + DMatrix::identity(l, l) * (0.5 * l as f64);
    let d = c.diagonal().map(|v| 1.0 / v.sqrt());
    DMatrix::from_fn(l, l, |r, s| c[(r, s)] * d[r] * d[s])
}

pub struct Instance {
    pub layout: BlockLayout,
    pub model: MeasurementModel,
    pub prior: DiversifiedPrior,
    pub posterior: Posterior,
}

/// Random model, all blocks active, variances in (0.2, 5), random SPD
/// correlations and the posterior they induce.
pub fn random_instance(seed: u64, g: usize, l: usize, m: usize) -> Instance {
    let mut rng = rng(seed);
    let layout = BlockLayout::new(g, l).unwrap();
    let n = g * l;
    let phi = gaussian_matrix(&mut rng, m, n) / (m as f64).sqrt();
    let y = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = rng.random_range(1.0..100.0);
    let model = MeasurementModel::new(phi, y, beta).unwrap();
    let gammas = DVector::from_fn(n, |_, _| rng.random_range(0.2..5.0));
    let correlations = (0..g).map(|_| random_correlation(&mut rng, l)).collect();
    let prior = DiversifiedPrior::new(
        &layout,
        gammas,
        correlations,
        DMatrix::identity(l, l),
        vec![0.0; g],
        vec![true; g],
    )
    .unwrap();
    let posterior = posterior_for(&model, &prior, &layout);
    Instance {
        layout,
        model,
        prior,
        posterior,
    }
}

pub fn posterior_for(
    model: &MeasurementModel,
    prior: &DiversifiedPrior,
    layout: &BlockLayout,
) -> Posterior {
    let sigma0 = assemble_prior_covariance(prior, layout).unwrap();
    compute_posterior(model, &sigma0, layout, prior.active_mask()).unwrap()
}

/// Same prior with element `k` of the variance vector replaced.
pub fn with_gamma(
    prior: &DiversifiedPrior,
    layout: &BlockLayout,
    k: usize,
    value: f64,
) -> DiversifiedPrior {
    let mut gammas = prior.gammas().clone();
    gammas[k] = value;
    DiversifiedPrior::new(
        layout,
        gammas,
        prior.correlations().to_vec(),
        prior.common_correlation().clone(),
        prior.multipliers().to_vec(),
        prior.active_mask().to_vec(),
    )
    .unwrap()
}
