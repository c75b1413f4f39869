//! The outer EM loop.
//!
//! One iteration runs, in order: prune, variance update, common correlation,
//! dual step (or full dual ascent), Toeplitz correction, posterior, noise
//! precision. The variance update uses the posterior from the previous
//! iteration.

use crate::config::{CorrelationMode, DualMode, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::inference::dual::{diversify_complete, dual_step, DualState};
use crate::inference::em::{compute_common_correlation, update_gamma};
use crate::inference::posterior::{
    active_blocks, check_dims, cost_from_blocks, posterior_from_blocks, update_beta,
};
use crate::inference::prune::{prune, prune_level};
use crate::inference::toeplitz::toeplitz_correct;
use crate::model::{BlockLayout, DiversifiedPrior, MeasurementModel, Posterior};

/// Stateful solver; `step` advances one outer iteration.
#[derive(Debug, Clone)]
pub struct DivSbl {
    model: MeasurementModel,
    layout: BlockLayout,
    config: SolverConfig,
    prior: DiversifiedPrior,
    posterior: Posterior,
    beta: f64,
    dual: DualState,
    cost_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl DivSbl {
    pub fn new(
        model: &MeasurementModel,
        layout: BlockLayout,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_dims(model, &layout)?;
        let beta = config
            .beta_init
            .unwrap_or(model.beta())
            .min(config.beta_max);
        let prior =
            DiversifiedPrior::with_gammas(&layout, config.initial_gammas(layout.total_dim()))?;
        let posterior = posterior_from_blocks(
            model.phi(),
            model.y(),
            beta,
            &layout,
            &active_blocks(&prior, &layout),
        )?;
        Ok(Self {
            model: model.clone(),
            dual: DualState::new(layout.num_blocks()),
            layout,
            config,
            prior,
            posterior,
            beta,
            cost_trace: Vec::new(),
            iterations: 0,
            converged: false,
        })
    }

    pub fn prior(&self) -> &DiversifiedPrior {
        &self.prior
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dual_state(&self) -> &DualState {
        &self.dual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn cost_trace(&self) -> &[f64] {
        &self.cost_trace
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// One outer iteration. Returns `true` once converged.
    pub fn step(&mut self) -> Result<bool> {
        if self.converged {
            return Ok(true);
        }
        self.iterations += 1;
        let cfg = &self.config;
        let layout = &self.layout;
        let previous_mean = self.posterior.mean().clone();

        let level = prune_level(&self.prior, layout, cfg.prune_threshold, cfg.prune_floor);
        prune(&mut self.prior, &mut self.posterior, layout, level);
        if self.prior.num_active() == 0 {
            self.posterior = Posterior::zeros(layout.total_dim());
            self.cost_trace.push(cost_from_blocks(
                self.model.phi(),
                self.model.y(),
                self.beta,
                layout,
                &Vec::new(),
            )?);
            self.converged = true;
            return Ok(true);
        }

        let gammas = update_gamma(&self.prior, &self.posterior, layout)?;
        self.prior.set_gammas(gammas);

        if cfg.correlation == CorrelationMode::Diversified {
            let common = compute_common_correlation(&self.prior, &self.posterior, layout)?;
            let (mut correlations, multipliers) = match cfg.dual_mode {
                DualMode::OneStep => {
                    let up = dual_step(
                        &self.prior,
                        &self.posterior,
                        layout,
                        &common,
                        self.dual.step_size(),
                    )?;
                    self.dual.step_index += 1;
                    self.dual.residuals = up.residuals;
                    (up.correlations, up.multipliers)
                }
                DualMode::Complete => {
                    let out = diversify_complete(
                        &self.prior,
                        &self.posterior,
                        layout,
                        &common,
                        cfg.dual_tol,
                        cfg.dual_max_iters,
                    )?;
                    self.dual.step_index = out.iterations.iter().copied().max().unwrap_or(0) + 1;
                    self.dual.residuals = out.residuals;
                    (out.correlations, out.multipliers)
                }
            };
            if cfg.toeplitz_enabled {
                for i in (0..layout.num_blocks()).filter(|&i| self.prior.is_active(i)) {
                    correlations[i] = toeplitz_correct(&correlations[i], cfg.r_clamp);
                }
            }
            self.dual.multipliers = multipliers.clone();
            self.prior.set_correlations(correlations);
            self.prior.set_multipliers(multipliers);
            self.prior.set_common_correlation(common);
        }

        let blocks = active_blocks(&self.prior, layout);
        self.posterior =
            posterior_from_blocks(self.model.phi(), self.model.y(), self.beta, layout, &blocks)?;
        if !self.posterior.mean().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("posterior mean"));
        }
        if cfg.learn_beta {
            self.beta = update_beta(&self.model, &self.posterior, cfg.beta_max);
        }
        self.cost_trace.push(cost_from_blocks(
            self.model.phi(),
            self.model.y(),
            self.beta,
            layout,
            &blocks,
        )?);

        let change = (self.posterior.mean() - previous_mean).amax();
        self.converged = change < cfg.conv_tol;
        Ok(self.converged)
    }

    /// Iterates until convergence or `max_iters`.
    pub fn run(mut self) -> Result<SolveResult> {
        while self.iterations < self.config.max_iters && !self.step()? {}
        Ok(self.into_result())
    }

    pub fn into_result(self) -> SolveResult {
        SolveResult {
            x_hat: self.posterior.mean().clone(),
            posterior: self.posterior,
            prior: self.prior,
            beta: self.beta,
            iterations: self.iterations,
            cost_trace: self.cost_trace,
            converged: self.converged,
        }
    }
}

/// Runs DivSBL to convergence.
pub fn solve(
    model: &MeasurementModel,
    layout: &BlockLayout,
    config: &SolverConfig,
) -> Result<SolveResult> {
    DivSbl::new(model, *layout, config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn instance(seed: u64) -> (MeasurementModel, BlockLayout, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n, l) = (40, 80, 4);
        let mut phi = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        for mut c in phi.column_iter_mut() {
            let norm = c.norm();
            c /= norm;
        }
        let mut x = DVector::zeros(n);
        for b in [3, 11] {
            for j in 0..l {
                x[b * l + j] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let y = &phi * &x;
        (
            MeasurementModel::new(phi, y, 1e10).unwrap(),
            BlockLayout::new(n / l, l).unwrap(),
            x,
        )
    }

    #[test]
    fn noiseless_recovery() {
        let (model, layout, x) = instance(1);
        let cfg = SolverConfig {
            learn_beta: false,
            ..Default::default()
        };
        let res = solve(&model, &layout, &cfg).unwrap();
        let nmse = (&res.x_hat - &x).norm_squared() / x.norm_squared();
        assert!(nmse < 1e-4, "nmse {nmse}");
        assert_eq!(res.x_hat, *res.posterior.mean());
    }

    #[test]
    fn zero_measurements_give_zero_estimate() {
        let (model, layout, _) = instance(2);
        let zero = MeasurementModel::new(model.phi().clone(), DVector::zeros(40), 1.0).unwrap();
        let res = solve(&zero, &layout, &SolverConfig::default()).unwrap();
        assert!(res.x_hat.iter().all(|&v| v == 0.0));
        assert!(res.converged);
    }

    #[test]
    fn deterministic() {
        let (model, layout, _) = instance(3);
        let cfg = SolverConfig {
            beta_init: Some(100.0),
            ..Default::default()
        };
        let a = solve(&model, &layout, &cfg).unwrap();
        let b = solve(&model, &layout, &cfg).unwrap();
        assert_eq!(a.x_hat, b.x_hat);
        assert_eq!(a.cost_trace, b.cost_trace);
        assert_eq!(a.prior, b.prior);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (model, _, _) = instance(4);
        let layout = BlockLayout::new(10, 4).unwrap();
        assert!(matches!(
            solve(&model, &layout, &SolverConfig::default()),
            Err(Error::Dimension(_))
        ));
    }
}
