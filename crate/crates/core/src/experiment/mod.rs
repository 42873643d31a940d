//! Experiment configuration, the two built-in benchmark experiments, synthetic
//! sensor data, file outputs, and the verification check suite.
//!
//! A run is fully described by an [`ExperimentConfig`] (TOML on disk). The
//! built-in experiments are plain configs:
//!
//! - `example1`: the five-agent benchmark digraph with the mixed
//!   nonconvex/convex cost library over `R²`.
//! - `example2`: the same topology solving robust Huber parameter estimation
//!   in `R³` from seeded Gaussian measurements.
//!
//! Outputs land in the config's output directory as `trajectory.csv` (exact
//! column layout documented in [`export`]), `report.json`, and — for
//! experiments with generated measurements — `dataset.csv`. Identical configs
//! produce byte-identical outputs.

mod config;
mod data;
mod export;
mod runner;
mod verify;

pub use config::{
    CostsSpec, Example2Params, ExperimentConfig, GraphSource, InitSpec, QuadraticSpec, Sigma0,
};
pub use data::{generate_gaussian_data, PolarGaussian};
pub use export::{
    build_report, read_trajectory_csv, write_dataset_csv, write_outputs, write_report_json,
    write_trajectory_csv, IntegrationInfo, OracleInfo, RunReport, TrajectoryFile,
};
pub use runner::{prepare, run, run_prepared, ExperimentError, PreparedExperiment, RunOutput};
pub use verify::{recompute_from_csv, verify_experiment, CheckResult, RecomputedReport};
