//! Named experiment setups used by `divsbl bench` and `divsbl sweep`.

use divsbl_core::datagen::VarianceMode;

use crate::config::{Domain, ExperimentConfig, Snr, SweepAxis, SweepParam};
use crate::error::{Error, Result};

/// Heteroscedastic blocks of random length and variance, `N = 162, M = 80`.
pub fn hetero() -> ExperimentConfig {
    ExperimentConfig::default()
}

/// Five aligned blocks of length 6 sharing one unit variance.
pub fn homo() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal.num_blocks = 5;
    cfg.signal.block_size_range = (6, 6);
    cfg.signal.alignment = 6;
    cfg.signal.variance_mode = VarianceMode::Homoscedastic;
    cfg.signal.variance_range = (1.0, 1.0);
    cfg
}

/// Noiseless, aligned, `K₀ < (M + 1) / 2L`: recovery should be exact.
pub fn theorem1() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal.dim = 80;
    cfg.signal.num_blocks = 2;
    cfg.signal.block_size_range = (4, 4);
    cfg.signal.alignment = 4;
    cfg.signal.regime_check = true;
    cfg.measurements = 40;
    cfg.preset_l = 4;
    cfg.snr = Snr::Noiseless;
    cfg.trials = 20;
    cfg.solver.learn_beta = false;
    cfg.solver.beta_init = Some(1e10);
    cfg
}

/// Block-sparse DCT coefficients of a length-480 signal (about 90 non-zeros),
/// sample rate 0.25, 20 dB.
pub fn dct() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal.dim = 480;
    cfg.signal.num_blocks = 4;
    cfg.signal.block_size_range = (16, 30);
    cfg.signal.domain = Domain::Dct;
    cfg.measurements = 120;
    cfg.preset_l = 8;
    cfg.snr = Snr::Fixed { db: 20.0 };
    cfg.trials = 20;
    cfg
}

pub fn bench(name: &str) -> Result<ExperimentConfig> {
    match name {
        "hetero" => Ok(hetero()),
        "homo" => Ok(homo()),
        "theorem1" => Ok(theorem1()),
        "dct" => Ok(dct()),
        _ => Err(unknown("bench preset", name, "hetero, homo, theorem1, dct")),
    }
}

fn axis(param: SweepParam, values: &[f64]) -> SweepAxis {
    SweepAxis {
        param,
        values: values.to_vec(),
    }
}

/// Preset block size 10, 20, 50 on one heteroscedastic family with large blocks.
pub fn block_size_sweep() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.signal.dim = 200;
    cfg.signal.num_blocks = 3;
    cfg.signal.block_size_range = (10, 30);
    cfg.measurements = 100;
    cfg.trials = 20;
    cfg.sweep = vec![axis(SweepParam::PresetL, &[10.0, 20.0, 50.0])];
    cfg
}

pub fn sample_rate_sweep() -> ExperimentConfig {
    ExperimentConfig {
        sweep: vec![axis(SweepParam::SampleRate, &[0.25, 0.35, 0.45, 0.55])],
        ..Default::default()
    }
}

pub fn snr_sweep() -> ExperimentConfig {
    let mut cfg = dct();
    cfg.sweep = vec![axis(SweepParam::SnrDb, &[10.0, 20.0, 30.0, 40.0, 50.0])];
    cfg
}

/// `γ` initial scale from 0.1 to 10⁴ on a single data seed.
pub fn init_sweep() -> ExperimentConfig {
    ExperimentConfig {
        trials: 1,
        sweep: vec![axis(SweepParam::GammaInitScale, &[0.1, 1.0, 1e2, 1e4])],
        ..Default::default()
    }
}

/// Success rate over an SNR × sample-rate grid.
pub fn phase_sweep() -> ExperimentConfig {
    ExperimentConfig {
        trials: 20,
        sweep: vec![
            axis(SweepParam::SnrDb, &[10.0, 20.0, 30.0]),
            axis(SweepParam::SampleRate, &[0.25, 0.4, 0.55]),
        ],
        ..Default::default()
    }
}

pub fn sweep(name: &str) -> Result<ExperimentConfig> {
    match name {
        "block-size" => Ok(block_size_sweep()),
        "sample-rate" => Ok(sample_rate_sweep()),
        "snr" => Ok(snr_sweep()),
        "init" => Ok(init_sweep()),
        "phase" => Ok(phase_sweep()),
        _ => Err(unknown(
            "sweep",
            name,
            "block-size, sample-rate, snr, init, phase",
        )),
    }
}

fn unknown(what: &str, name: &str, known: &str) -> Error {
    divsbl_core::Error::Config(format!("unknown {what} {name:?} (expected one of {known})")).into()
}
