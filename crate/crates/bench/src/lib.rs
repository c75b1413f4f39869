//! Fixtures shared by the benchmarks.

use divsbl_core::datagen::{add_noise, gen_block_sparse, gen_design_matrix, SignalSpec};
use divsbl_core::{BlockLayout, MeasurementModel, Result};
use nalgebra::DVector;

pub struct Problem {
    pub model: MeasurementModel,
    pub layout: BlockLayout,
}

/// Heterogeneous block-sparse problem: `num_blocks` blocks of length 5..=12
/// in dimension `n`, `m` Gaussian measurements at 20 dB, solver block size `l`.
pub fn hetero_problem(
    n: usize,
    m: usize,
    num_blocks: usize,
    l: usize,
    seed: u64,
) -> Result<Problem> {
    let spec = SignalSpec {
        dim: n,
        num_blocks,
        block_size_range: (5, 12),
        seed,
        ..SignalSpec::default()
    };
    let truth = gen_block_sparse(&spec)?;
    let phi = gen_design_matrix(m, n, seed.wrapping_add(1))?;
    let clean: DVector<f64> = &phi * truth.x();
    let (y, beta) = add_noise(&clean, 20.0, seed.wrapping_add(2))?;
    let model = MeasurementModel::new(phi, y, beta)?;
    let layout = BlockLayout::for_dimension(n, l)?;
    Ok(Problem { model, layout })
}

/// The default benchmark size: N = 162, M = 80, three blocks, L = 6.
pub fn default_problem(seed: u64) -> Problem {
    hetero_problem(162, 80, 3, 6, seed).expect("fixture parameters are valid")
}
