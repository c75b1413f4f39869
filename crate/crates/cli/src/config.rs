//! Experiment description and its flat `key = value` file format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use divsbl_core::datagen::VarianceMode;
use divsbl_core::{DualMode, Error, GammaInit, Result, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Divsbl,
    Sbl,
    Bsbl,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Divsbl => "divsbl",
            Self::Sbl => "sbl",
            Self::Bsbl => "bsbl",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "divsbl" => Ok(Self::Divsbl),
            "sbl" => Ok(Self::Sbl),
            "bsbl" | "bsbl_strong" => Ok(Self::Bsbl),
            _ => Err(Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Where the sparsity lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `x` itself is block sparse.
    #[default]
    Signal,
    /// `x = Ψw` with `w` block sparse and `Ψ` the orthonormal DCT basis.
    Dct,
}

/// Noise level per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Snr {
    Noiseless,
    Fixed {
        db: f64,
    },
    /// Drawn uniformly per trial.
    Uniform {
        low: f64,
        high: f64,
    },
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Noiseless => f.write_str("none"),
            Self::Fixed { db } => write!(f, "{db}"),
            Self::Uniform { low, high } => write!(f, "{low}:{high}"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" || s == "inf" {
            return Ok(Self::Noiseless);
        }
        if let Some((a, b)) = s.split_once(':') {
            let (low, high) = (parse_f64("snr", a)?, parse_f64("snr", b)?);
            if !(low <= high) {
                return Err(Error::Config(format!("empty SNR range {s}")));
            }
            return Ok(Self::Uniform { low, high });
        }
        Ok(Self::Fixed {
            db: parse_f64("snr", s)?,
        })
    }
}

/// The synthetic signal family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFamily {
    pub dim: usize,
    pub num_blocks: usize,
    pub block_size_range: (usize, usize),
    pub variance_mode: VarianceMode,
    pub variance_range: (f64, f64),
    pub alignment: usize,
    pub domain: Domain,
    /// Reject instances outside `K₀ < (M + 1) / 2L`.
    pub regime_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PresetL,
    SampleRate,
    SnrDb,
    GammaInitScale,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::PresetL => "preset_l",
            Self::SampleRate => "sample_rate",
            Self::SnrDb => "snr_db",
            Self::GammaInitScale => "gamma_init_scale",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "preset_l" => Ok(Self::PresetL),
            "sample_rate" => Ok(Self::SampleRate),
            "snr_db" => Ok(Self::SnrDb),
            "gamma_init_scale" => Ok(Self::GammaInitScale),
            _ => Err(Error::Config(format!("unknown sweep parameter {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub signal: SignalFamily,
    pub measurements: usize,
    pub preset_l: usize,
    pub snr: Snr,
    pub trials: usize,
    pub base_seed: u64,
    /// NMSE below which a trial counts as a success.
    pub success_threshold: f64,
    pub solver: SolverConfig,
    /// Cells are the Cartesian product of the axes.
    pub sweep: Vec<SweepAxis>,
}

impl Default for ExperimentConfig {
    /// Heteroscedastic Table-1 style instance at `N = 162, M = 80`.
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Divsbl,
            signal: SignalFamily {
                dim: 162,
                num_blocks: 3,
                block_size_range: (5, 12),
                variance_mode: VarianceMode::Heteroscedastic,
                variance_range: (0.1, 10.0),
                alignment: 1,
                domain: Domain::Signal,
                regime_check: false,
            },
            measurements: 80,
            preset_l: 6,
            snr: Snr::Uniform {
                low: 15.0,
                high: 25.0,
            },
            trials: 50,
            base_seed: 0,
            success_threshold: divsbl_core::metrics::SUCCESS_THRESHOLD,
            solver: SolverConfig::default(),
            sweep: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.measurements == 0 || self.preset_l == 0 || self.signal.dim == 0 {
            return Err(Error::Config("dimensions must be positive".into()));
        }
        if self.sweep.iter().any(|axis| axis.values.is_empty()) {
            return Err(Error::Config("sweep axes need at least one value".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Config("success_threshold must be positive".into()));
        }
        self.solver.validate()
    }

    /// Copy with one swept parameter set to `value`.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let as_count = |what: &str| {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!(
                    "{what} must be a positive integer, got {value}"
                )))
            }
        };
        match param {
            SweepParam::PresetL => cfg.preset_l = as_count("preset_l")?,
            SweepParam::SampleRate => {
                if !(value > 0.0 && value <= 1.0) {
                    return Err(Error::Config(format!(
                        "sample_rate must lie in (0, 1], got {value}"
                    )));
                }
                cfg.measurements = ((value * cfg.signal.dim as f64).round() as usize).max(1);
            }
            SweepParam::SnrDb => cfg.snr = Snr::Fixed { db: value },
            SweepParam::GammaInitScale => cfg.solver.gamma_init_scale = value,
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    /// Overrides fields with the `key = value` lines of a file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text).map_err(|e| match e {
            Error::Config(message) => Error::Config(format!("{}: {message}", path.display())),
            other => other,
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_config(e))))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.solver;
        match key {
            "algorithm" => self.algorithm = value.parse()?,
            "n" | "dim" => self.signal.dim = parse(key, value)?,
            "m" | "measurements" => self.measurements = parse(key, value)?,
            "preset_l" => self.preset_l = parse(key, value)?,
            "num_blocks" => self.signal.num_blocks = parse(key, value)?,
            "block_size_range" => self.signal.block_size_range = parse_pair(key, value)?,
            "variance_mode" => {
                self.signal.variance_mode = match value {
                    "homoscedastic" => VarianceMode::Homoscedastic,
                    "heteroscedastic" => VarianceMode::Heteroscedastic,
                    _ => return Err(Error::Config(format!("unknown variance_mode {value:?}"))),
                }
            }
            "variance_range" => self.signal.variance_range = parse_pair(key, value)?,
            "alignment" => self.signal.alignment = parse(key, value)?,
            "domain" => {
                self.signal.domain = match value {
                    "signal" => Domain::Signal,
                    "dct" => Domain::Dct,
                    _ => return Err(Error::Config(format!("unknown domain {value:?}"))),
                }
            }
            "regime_check" => self.signal.regime_check = parse(key, value)?,
            "snr" | "snr_db" => self.snr = value.parse()?,
            "trials" => self.trials = parse(key, value)?,
            "seed" | "base_seed" => self.base_seed = parse(key, value)?,
            "success_threshold" => self.success_threshold = parse(key, value)?,
            "sweep" => self.sweep = parse_sweep(value)?,
            "max_iters" => s.max_iters = parse(key, value)?,
            "conv_tol" => s.conv_tol = parse(key, value)?,
            "prune_threshold" => s.prune_threshold = parse(key, value)?,
            "prune_floor" => s.prune_floor = parse(key, value)?,
            "dual_mode" => {
                s.dual_mode = match value {
                    "one_step" => DualMode::OneStep,
                    "complete" => DualMode::Complete,
                    _ => return Err(Error::Config(format!("unknown dual_mode {value:?}"))),
                }
            }
            "dual_tol" => s.dual_tol = parse(key, value)?,
            "dual_max_iters" => s.dual_max_iters = parse(key, value)?,
            "toeplitz_enabled" => s.toeplitz_enabled = parse(key, value)?,
            "learn_beta" => s.learn_beta = parse(key, value)?,
            "beta_init" => {
                s.beta_init = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "beta_max" => s.beta_max = parse(key, value)?,
            "gamma_init_scale" => s.gamma_init_scale = parse(key, value)?,
            "gamma_init" => {
                s.gamma_init = match value.split_once(':') {
                    None if value == "constant" => GammaInit::Constant,
                    Some(("uniform", seed)) => GammaInit::Uniform {
                        seed: parse(key, seed)?,
                    },
                    _ => {
                        return Err(Error::Config(format!(
                            "gamma_init must be constant or uniform:<seed>, got {value:?}"
                        )))
                    }
                }
            }
            "r_clamp" => s.r_clamp = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    parse(key, value.trim())
}

fn parse_pair<T: FromStr>(key: &str, value: &str) -> Result<(T, T)> {
    let (a, b) = value
        .split_once(':')
        .or_else(|| value.split_once(','))
        .ok_or_else(|| Error::Config(format!("{key} expects low:high, got {value:?}")))?;
    Ok((parse(key, a.trim())?, parse(key, b.trim())?))
}

/// `param=v1,v2,...` axes separated by `;`.
fn parse_sweep(value: &str) -> Result<Vec<SweepAxis>> {
    value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|axis| {
            let (param, values) = axis.split_once('=').ok_or_else(|| {
                Error::Config(format!("sweep axis {axis:?} must be param=v1,v2,..."))
            })?;
            let values = values
                .split(',')
                .filter(|v| !v.trim().is_empty())
                .map(|v| parse_f64("sweep", v))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepAxis {
                param: param.trim().parse()?,
                values,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# comment\nalgorithm = bsbl\nn = 80\nsnr = 15:25\nblock_size_range = 4:4\n\
             sweep = snr_db=10,20;sample_rate=0.25\nlearn_beta = false\nbeta_init = 1e10\n",
        )
        .unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Bsbl);
        assert_eq!(cfg.signal.dim, 80);
        assert_eq!(
            cfg.snr,
            Snr::Uniform {
                low: 15.0,
                high: 25.0
            }
        );
        assert_eq!(cfg.signal.block_size_range, (4, 4));
        assert_eq!(cfg.sweep.len(), 2);
        assert_eq!(cfg.sweep[0].values, vec![10.0, 20.0]);
        assert!(!cfg.solver.learn_beta);
        assert_eq!(cfg.solver.beta_init, Some(1e10));
    }

    #[test]
    fn rejects_unknown_keys_and_params() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("sweep = colour=1,2").is_err());
        assert!(cfg.apply_text("trials = many").is_err());
    }

    #[test]
    fn with_param_sets_fields() {
        let cfg = ExperimentConfig::default();
        assert_eq!(
            cfg.with_param(SweepParam::SampleRate, 0.25)
                .unwrap()
                .measurements,
            41
        );
        assert_eq!(
            cfg.with_param(SweepParam::PresetL, 9.0).unwrap().preset_l,
            9
        );
        assert!(cfg.with_param(SweepParam::PresetL, 2.5).is_err());
    }
}
