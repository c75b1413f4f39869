use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiversifiedPrior, Posterior};

/// How the per-block correlation matrices are diversified each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DualMode {
    /// A single multiplier step per outer iteration; multipliers carry over.
    #[default]
    OneStep,
    /// Run dual ascent to its own tolerance every outer iteration.
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// Learn `B_i` (common matrix, dual ascent, optional Toeplitz correction).
    #[default]
    Diversified,
    /// Pin every `B_i` to the identity.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GammaInit {
    /// `γ = η · 1`
    #[default]
    Constant,
    /// `γ = η · U(0, 1)` per element, drawn from a seeded generator.
    Uniform { seed: u64 },
}

/// Control knobs for the outer EM loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `‖μ_t − μ_{t−1}‖_∞` drops below this.
    pub conv_tol: f64,
    /// Relative pruning level: a block is pruned when its mean variance is
    /// below `prune_threshold · max_l mean(γ_l)`.
    pub prune_threshold: f64,
    /// Absolute pruning level applied on top of the relative one.
    pub prune_floor: f64,
    pub dual_mode: DualMode,
    pub dual_tol: f64,
    pub dual_max_iters: usize,
    pub toeplitz_enabled: bool,
    pub correlation: CorrelationMode,
    pub learn_beta: bool,
    /// Initial noise precision. `None` starts from the model's own `β`.
    pub beta_init: Option<f64>,
    pub beta_max: f64,
    pub gamma_init_scale: f64,
    pub gamma_init: GammaInit,
    pub r_clamp: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            conv_tol: 1e-8,
            prune_threshold: 1e-3,
            prune_floor: 1e-12,
            dual_mode: DualMode::OneStep,
            dual_tol: 1e-3,
            dual_max_iters: 500,
            toeplitz_enabled: true,
            correlation: CorrelationMode::Diversified,
            learn_beta: true,
            beta_init: None,
            beta_max: 1e12,
            gamma_init_scale: 1.0,
            gamma_init: GammaInit::Constant,
            r_clamp: 0.99,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if self.max_iters == 0 || self.dual_max_iters == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        positive("conv_tol", self.conv_tol)?;
        positive("dual_tol", self.dual_tol)?;
        positive("beta_max", self.beta_max)?;
        positive("gamma_init_scale", self.gamma_init_scale)?;
        if let Some(b) = self.beta_init {
            positive("beta_init", b)?;
        }
        if !(self.prune_threshold >= 0.0 && self.prune_threshold.is_finite()) {
            return Err(Error::Config("prune_threshold must be non-negative".into()));
        }
        if !(self.prune_floor >= 0.0 && self.prune_floor.is_finite()) {
            return Err(Error::Config("prune_floor must be non-negative".into()));
        }
        if !(self.r_clamp > 0.0 && self.r_clamp < 1.0) {
            return Err(Error::Config(format!(
                "r_clamp must lie in (0, 1), got {}",
                self.r_clamp
            )));
        }
        Ok(())
    }

    pub(crate) fn initial_gammas(&self, n: usize) -> DVector<f64> {
        match self.gamma_init {
            GammaInit::Constant => DVector::from_element(n, self.gamma_init_scale),
            GammaInit::Uniform { seed } => {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                // Open interval keeps every block strictly positive.
                DVector::from_fn(n, |_, _| {
                    self.gamma_init_scale * rng.random_range(f64::EPSILON..1.0)
                })
            }
        }
    }
}

/// Output of a solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// MAP estimate; identical to `posterior.mean()`.
    pub x_hat: DVector<f64>,
    pub posterior: Posterior,
    pub prior: DiversifiedPrior,
    pub beta: f64,
    pub iterations: usize,
    /// Log marginal likelihood `−yᵀΣ_y⁻¹y − log det Σ_y` after each outer iteration.
    pub cost_trace: Vec<f64>,
    pub converged: bool,
}

impl SolveResult {
    pub fn active_mask(&self) -> &[bool] {
        self.prior.active_mask()
    }

    pub fn support_size(&self) -> usize {
        self.prior.support_size()
    }
}
