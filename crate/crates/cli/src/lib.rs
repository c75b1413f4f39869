//! Experiment harness for `divsbl-core`: seeded trials, parameter sweeps,
//! aggregation and CSV/JSON output. The `divsbl` binary is a thin clap
//! front end over this library.

pub mod config;
pub mod emit;
pub mod error;
pub mod harness;
pub mod presets;
pub mod summary;

pub use config::{Algorithm, Domain, ExperimentConfig, SignalFamily, Snr, SweepAxis, SweepParam};
pub use emit::{emit, Format};
pub use error::{Error, Result};
pub use harness::{run_sweep, run_trial, Cell, SweepResult, TrialRecord};
pub use summary::{summarize, Stats, Summary};
