//! The distributed primal-dual optimizer, its parameter derivation and the
//! centralized baselines it is compared against.

mod baseline;
mod engine;
mod params;
mod run;
pub mod streams;

pub use baseline::{run_centralized_baseline, BaselineAlgo, BaselineConfig};
pub use engine::{DeltaSchedule, Execution, SwarmState, Zodiac, DIVERGENCE_LIMIT};
pub use params::{derive_params, kappa2_upper, min_horizon, AlgoParams, ParamMargins};
pub use run::{run, run_from, Init, MetricsRow, RunOptions, RunRecord, RunSummary};
