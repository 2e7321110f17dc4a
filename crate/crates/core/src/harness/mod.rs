//! Experiment runner: configuration, seed sweeps, CSV emission and log-log
//! rate fits.

mod config;
mod experiment;
mod output;
mod rate;

pub use config::{parse_seeds, ExperimentConfig, Preset, Task, TopologyKind};
pub use experiment::{
    benchmark, build_problem, build_topology, rate_sweep, run_experiment, write_seed_csvs, BenchmarkOutput,
    BenchmarkRow, Experiment, RunOutput, SweepOutput,
};
pub use output::{average_rows, write_metrics_csv, write_metrics_file, METRICS_HEADER};
pub use rate::{rate_fit, RateFit};
