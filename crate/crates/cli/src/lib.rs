//! Configuration, orchestration and reporting for `gfvi` experiments.
//!
//! A run reads an [`ExperimentConfig`], executes one experiment with fully
//! seeded randomness, and writes `results.csv` and `summary.toml`.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use report::{emit_report, RunOutput};
pub use run::run;
