//! Distributed zeroth-order primal-dual optimization with powerball
//! acceleration, simulated over undirected agent networks.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod optimizer;
pub mod powerball;
pub mod problems;
pub mod scalar;
pub mod topology;

pub use error::{Result, ZodiacError};
pub use scalar::Scalar;

pub type Problem = problems::OracleProblem<f64>;
pub type Problem32 = problems::OracleProblem<f32>;
pub type Params = optimizer::AlgoParams<f64>;
pub type Params32 = optimizer::AlgoParams<f32>;
pub type Swarm = optimizer::SwarmState<f64>;
pub type Swarm32 = optimizer::SwarmState<f32>;
pub type Record = optimizer::RunRecord<f64>;
pub type Record32 = optimizer::RunRecord<f32>;
pub type Gamma = powerball::PowerballGamma<f64>;
pub type Gamma32 = powerball::PowerballGamma<f32>;
