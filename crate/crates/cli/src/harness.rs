//! Trial execution and sweeps.
//!
//! Trial `t` of every cell uses the seed `base_seed + t`, so cells that
//! differ only in a solver knob see identical data. The design matrix,
//! signal, SNR draw and noise each take their own seed from a ChaCha8
//! stream keyed by the trial seed.

use std::time::Instant;

use divsbl_core::baselines::{bsbl_strong_solve, classic_sbl_solve};
use divsbl_core::datagen::{
    add_noise, dct_basis, gen_block_sparse, gen_design_matrix, GroundTruth, RegimeCheck, SignalSpec,
};
use divsbl_core::metrics::{sparsity_diagnostic, TrialMetrics};
use divsbl_core::{solve, BlockLayout, MeasurementModel, SolveResult};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, Domain, ExperimentConfig, Snr};
use crate::error::{Error, Result};
use crate::summary::{summarize, Summary};

/// Signal-to-noise ratio assumed when guessing the initial noise precision.
const ASSUMED_SNR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSeeds {
    pub design: u64,
    pub signal: u64,
    pub snr: u64,
    pub noise: u64,
}

impl DataSeeds {
    pub fn derive(trial_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        Self {
            design: rng.next_u64(),
            signal: rng.next_u64(),
            snr: rng.next_u64(),
            noise: rng.next_u64(),
        }
    }
}

/// One generated problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub phi: DMatrix<f64>,
    pub y: DVector<f64>,
    /// The block-sparse vector (DCT coefficients in the DCT domain).
    pub truth: GroundTruth,
    /// Orthonormal synthesis basis, `x = Ψw`, when sparsity is in the DCT domain.
    pub basis: Option<DMatrix<f64>>,
    pub snr_db: Option<f64>,
    /// Precision of the noise actually added.
    pub beta_true: Option<f64>,
}

impl Instance {
    /// Signal as measured: `x = Ψw` in the DCT domain, the sparse vector otherwise.
    pub fn signal(&self) -> DVector<f64> {
        let w = self.truth.x();
        match &self.basis {
            Some(psi) => psi * w,
            None => w,
        }
    }

    /// Matrix the solver sees: `ΦΨ` in the DCT domain, `Φ` otherwise.
    pub fn dictionary(&self) -> DMatrix<f64> {
        match &self.basis {
            Some(psi) => &self.phi * psi,
            None => self.phi.clone(),
        }
    }
}

pub fn generate_instance(cfg: &ExperimentConfig, seeds: &DataSeeds) -> Result<Instance> {
    let n = cfg.signal.dim;
    let spec = SignalSpec {
        dim: n,
        num_blocks: cfg.signal.num_blocks,
        block_size_range: cfg.signal.block_size_range,
        variance_mode: cfg.signal.variance_mode,
        variance_range: cfg.signal.variance_range,
        alignment: cfg.signal.alignment,
        regime: cfg.signal.regime_check.then_some(RegimeCheck {
            measurements: cfg.measurements,
            block_size: cfg.preset_l,
        }),
        seed: seeds.signal,
    };
    let truth = gen_block_sparse(&spec)?;
    let phi = gen_design_matrix(cfg.measurements, n, seeds.design)?;
    let basis = match cfg.signal.domain {
        Domain::Signal => None,
        Domain::Dct => Some(dct_basis(n)?),
    };
    let mut instance = Instance {
        phi,
        y: DVector::zeros(0),
        truth,
        basis,
        snr_db: None,
        beta_true: None,
    };
    let clean = &instance.phi * instance.signal();
    let snr_db = match cfg.snr {
        Snr::Noiseless => None,
        Snr::Fixed { db } => Some(db),
        Snr::Uniform { low, high } => Some(if low == high {
            low
        } else {
            ChaCha8Rng::seed_from_u64(seeds.snr).random_range(low..=high)
        }),
    };
    instance.y = match snr_db {
        None => clean,
        Some(db) => {
            let (y, beta) = add_noise(&clean, db, seeds.noise)?;
            instance.beta_true = Some(beta);
            y
        }
    };
    instance.snr_db = snr_db;
    Ok(instance)
}

/// Starting noise precision when the config does not fix one: the value
/// implied by a 20 dB SNR, capped at `beta_max`.
pub fn initial_beta(y: &DVector<f64>, beta_max: f64) -> f64 {
    let energy = y.norm_squared();
    if energy > 0.0 {
        (ASSUMED_SNR * y.len() as f64 / energy).min(beta_max)
    } else {
        beta_max
    }
}

pub fn run_solver(
    algorithm: Algorithm,
    model: &MeasurementModel,
    preset_l: usize,
    solver: &divsbl_core::SolverConfig,
) -> divsbl_core::Result<SolveResult> {
    let layout = BlockLayout::for_dimension(model.signal_dim(), preset_l)?;
    match algorithm {
        Algorithm::Divsbl => solve(model, &layout, solver),
        Algorithm::Sbl => classic_sbl_solve(model, solver),
        Algorithm::Bsbl => bsbl_strong_solve(model, &layout, solver),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub data_seeds: DataSeeds,
    pub snr_db: Option<f64>,
    pub beta_true: Option<f64>,
    pub beta: f64,
    pub metrics: TrialMetrics,
    pub iterations: usize,
    pub converged: bool,
    /// More non-zeros than measurements: the estimate cannot be the unique sparsest one.
    pub exceeds_sparsity_bound: bool,
    /// Wall clock of the solve alone.
    pub elapsed_ms: f64,
    pub cost_trace: Vec<f64>,
}

pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialRecord> {
    let attach = |source| Error::Trial {
        index: trial,
        source,
    };
    let seed = cfg.base_seed.wrapping_add(trial as u64);
    let data_seeds = DataSeeds::derive(seed);
    let instance = generate_instance(cfg, &data_seeds).map_err(|e| match e {
        Error::Core(source) => attach(source),
        other => other,
    })?;
    let beta0 = initial_beta(&instance.y, cfg.solver.beta_max);
    let model =
        MeasurementModel::new(instance.dictionary(), instance.y.clone(), beta0).map_err(attach)?;

    let started = Instant::now();
    let result = run_solver(cfg.algorithm, &model, cfg.preset_l, &cfg.solver).map_err(attach)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    let x_true = instance.signal();
    let x_hat = match &instance.basis {
        Some(psi) => psi * &result.x_hat,
        None => result.x_hat.clone(),
    };
    let support_size = result.support_size();
    let mut metrics = TrialMetrics::evaluate(
        &x_hat,
        &x_true,
        &instance.truth.support_blocks,
        support_size,
        cfg.success_threshold,
    )
    .map_err(attach)?;
    if instance.basis.is_some() {
        // Blocks live in the coefficient domain.
        metrics.block_hit_rate =
            divsbl_core::metrics::block_hit_rate(&result.x_hat, &instance.truth.support_blocks)
                .map_err(attach)?;
    }
    Ok(TrialRecord {
        trial,
        seed,
        data_seeds,
        snr_db: instance.snr_db,
        beta_true: instance.beta_true,
        beta: result.beta,
        metrics,
        iterations: result.iterations,
        converged: result.converged,
        exceeds_sparsity_bound: sparsity_diagnostic(support_size, cfg.measurements).exceeds,
        elapsed_ms,
        cost_trace: result.cost_trace,
    })
}

/// One combination of swept values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// `(parameter, value)` per sweep axis, in axis order.
    pub params: Vec<(String, f64)>,
    pub summary: Summary,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
}

/// Sweep coordinates of one cell, as `(parameter name, value)` pairs.
pub type CellParams = Vec<(String, f64)>;

/// Configs for every cell, in row-major order over the axes.
pub fn cell_configs(cfg: &ExperimentConfig) -> Result<Vec<(CellParams, ExperimentConfig)>> {
    let mut cells = vec![(Vec::new(), cfg.clone())];
    for axis in &cfg.sweep {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for (params, base) in &cells {
            for &value in &axis.values {
                let mut params = params.clone();
                params.push((axis.param.name().to_owned(), value));
                next.push((params, base.with_param(axis.param, value)?));
            }
        }
        cells = next;
    }
    for (_, c) in &mut cells {
        c.sweep.clear();
        c.validate()?;
    }
    Ok(cells)
}

/// Runs every (cell, trial) pair on the current rayon pool. Results do not
/// depend on the thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let cells = cell_configs(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(c, t)| run_trial(&cells[c].1, t))
        .collect::<Result<_>>()?;
    let mut records = records.into_iter();
    let cells = cells
        .into_iter()
        .map(|(params, _)| {
            let records: Vec<_> = records.by_ref().take(cfg.trials).collect();
            Ok(Cell {
                params,
                summary: summarize(&records)?,
                records,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config: cfg.clone(),
        cells,
    })
}
