//! Irreversible removal of blocks whose variances have collapsed.

use crate::model::{BlockLayout, DiversifiedPrior, Posterior};

fn block_mean(prior: &DiversifiedPrior, layout: &BlockLayout, i: usize) -> f64 {
    prior.block_gammas(layout, i).mean()
}

/// Absolute pruning level `max(relative · max_l mean(γ_l), floor)` over the
/// active blocks.
pub fn prune_level(
    prior: &DiversifiedPrior,
    layout: &BlockLayout,
    relative: f64,
    floor: f64,
) -> f64 {
    let peak = (0..layout.num_blocks())
        .filter(|&i| prior.is_active(i))
        .map(|i| block_mean(prior, layout, i))
        .fold(0.0, f64::max);
    (relative * peak).max(floor)
}

/// Prunes every active block whose mean variance is strictly below
/// `threshold`, zeroing its variances and posterior moments. Returns the
/// indices of the blocks pruned by this call.
pub fn prune(
    prior: &mut DiversifiedPrior,
    posterior: &mut Posterior,
    layout: &BlockLayout,
    threshold: f64,
) -> Vec<usize> {
    let doomed: Vec<usize> = (0..layout.num_blocks())
        .filter(|&i| prior.is_active(i) && block_mean(prior, layout, i) < threshold)
        .collect();
    for &i in &doomed {
        prior.deactivate(layout, i);
        posterior.clear_block(layout, i);
    }
    doomed
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn setup(means: &[f64]) -> (BlockLayout, DiversifiedPrior, Posterior) {
        let layout = BlockLayout::new(means.len(), 2).unwrap();
        let gammas = DVector::from_fn(layout.total_dim(), |k, _| means[k / 2]);
        let prior = DiversifiedPrior::with_gammas(&layout, gammas).unwrap();
        let n = layout.total_dim();
        let post = Posterior::new(
            DVector::from_element(n, 1.0),
            DMatrix::from_element(n, n, 0.1),
        )
        .unwrap();
        (layout, prior, post)
    }

    #[test]
    fn below_threshold_is_pruned() {
        let (layout, mut prior, mut post) = setup(&[1e-9]);
        assert_eq!(prune(&mut prior, &mut post, &layout, 1e-6), vec![0]);
        assert!(!prior.is_active(0));
        assert!(post.mean().iter().all(|&v| v == 0.0));
        assert!(post.covariance().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn above_threshold_is_untouched() {
        let (layout, mut prior, mut post) = setup(&[1.0]);
        let before = (prior.clone(), post.clone());
        assert!(prune(&mut prior, &mut post, &layout, 1e-6).is_empty());
        assert_eq!((prior, post), before);
    }

    #[test]
    fn mixed_blocks() {
        let (layout, mut prior, mut post) = setup(&[1e-9, 0.5, 1e-9]);
        assert_eq!(prune(&mut prior, &mut post, &layout, 1e-6), vec![0, 2]);
        assert_eq!(prior.active_mask(), &[false, true, false]);
        assert_eq!(post.mean().as_slice(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(post.covariance()[(2, 3)], 0.1);
        assert_eq!(post.covariance()[(2, 0)], 0.0);
    }

    #[test]
    fn level_is_relative_with_floor() {
        let (layout, prior, _) = setup(&[2.0, 0.5]);
        assert_eq!(prune_level(&prior, &layout, 1e-3, 1e-12), 2e-3);
        assert_eq!(prune_level(&prior, &layout, 0.0, 1e-12), 1e-12);
    }
}
