#![allow(dead_code)]

use divsbl_cli::config::{ExperimentConfig, Snr};

/// Small, fast instance family: N = 40, M = 24, L = 4.
pub fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal.dim = 40;
    cfg.signal.num_blocks = 2;
    cfg.signal.block_size_range = (3, 6);
    cfg.measurements = 24;
    cfg.preset_l = 4;
    cfg.snr = Snr::Uniform {
        low: 15.0,
        high: 25.0,
    };
    cfg.trials = 3;
    cfg.base_seed = 42;
    cfg.solver.max_iters = 40;
    cfg
}
