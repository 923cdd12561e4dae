//! Monte-Carlo benchmark harness for the `fie` estimator library.
//!
//! Runs batches of randomized scenarios through the optimization-based
//! estimator and an extended Kalman filter baseline, pools the estimation
//! errors into plot-ready statistics, and exposes the whole pipeline behind
//! a small CLI. Outputs are deterministic for a given configuration and seed
//! regardless of how many worker threads run the instances.

pub mod cli;
pub mod config;
pub mod report;
pub mod run;

pub use cli::cli_main;
pub use config::{EstimatorSet, ExperimentMode, Preset, RunConfig};
pub use report::write_outputs;
pub use run::{
    run_monte_carlo, summarize, EcdfPoint, ErrorRecord, EstimatorSummary, PerTRow, RunOutcome,
    RunSummary,
};
