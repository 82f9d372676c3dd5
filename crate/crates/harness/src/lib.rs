//! Experiment harness for the spiked Wigner AMP core: configs, trial runners, scans,
//! aggregation and CSV output.

pub mod aggregate;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod records;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiments::{run, run_experiment, run_experiment_with_workers, run_scan, Output};
pub use records::{Metric, ScanRow, TrialRecord};
