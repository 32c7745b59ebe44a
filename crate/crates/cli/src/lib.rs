//! Experiment harness for the `holocover` library: JSON run configs,
//! experiment runners and deterministic CSV/JSON reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, RunConfig, SCHEMA_VERSION};
pub use experiments::{convergence_table, run_batch, run_experiment, ConvergenceRow};
pub use report::{emit_report, Check, Format, Report, ReportError, Summary, Table};
