//! Experiment runner: configuration, pipeline dispatch, JSON reports and CSV
//! sample tables.

pub mod args;
pub mod config;
pub mod output;
pub mod report;

pub use config::{ExperimentConfig, Pipeline};
pub use output::emit_plot_data;
pub use report::{compute_report, run, run_in, RunReport};
