//! Single-agent zeroth-order baselines on the mean objective.
//!
//! Each step draws an agent uniformly, then one of its samples uniformly, then
//! one coordinate `j`, and moves `x ← x − step_size · g` where
//!
//! - ZO-SGD: `g = p · (F(x+δeⱼ) − F(x−δeⱼ)) / (2δ) · eⱼ`;
//! - ZO-SCD: the same difference without the factor `p`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::engine::{SwarmState, DIVERGENCE_LIMIT};
use super::run::{initial_iterates, Init, RunRecord, Tracker};
use super::streams;
use crate::error::{Result, ZodiacError};
use crate::powerball::PowerballGamma;
use crate::problems::{Diagnostics, SampleRef, ZerothOrderOracle};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineAlgo {
    ZoSgd,
    ZoScd,
}

impl FromStr for BaselineAlgo {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "zo_sgd" => Ok(Self::ZoSgd),
            "zo_scd" => Ok(Self::ZoScd),
            _ => Err(ZodiacError::InvalidArgument(format!("unknown baseline {s:?}"))),
        }
    }
}

impl fmt::Display for BaselineAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZoSgd => "zo_sgd",
            Self::ZoScd => "zo_scd",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig<T> {
    pub algo: BaselineAlgo,
    pub steps: usize,
    pub step_size: T,
    pub delta: T,
    pub seed: u64,
    pub record_every: usize,
    pub init: Init<T>,
    pub salt: String,
}

impl<T: Scalar> BaselineConfig<T> {
    pub fn new(algo: BaselineAlgo, steps: usize, step_size: T, delta: T, seed: u64) -> Self {
        Self {
            algo,
            steps,
            step_size,
            delta,
            seed,
            record_every: 1,
            init: Init::Gaussian,
            salt: String::new(),
        }
    }
}

/// Runs the chosen baseline. The returned state has a single row.
pub fn run_centralized_baseline<T, P>(problem: &P, cfg: &BaselineConfig<T>) -> Result<RunRecord<T>>
where
    T: Scalar,
    P: ZerothOrderOracle<T> + Diagnostics<T>,
{
    if !(cfg.step_size > T::zero()) || !(cfg.delta > T::zero()) {
        return Err(ZodiacError::InvalidArgument(format!(
            "step size and delta must be positive (got {}, {})",
            cfg.step_size, cfg.delta
        )));
    }
    let p = problem.dim();
    let x0 = initial_iterates(&cfg.init, 1, p, cfg.seed, &cfg.salt)?;
    let mut state = SwarmState::new(x0, cfg.seed, &cfg.salt);
    // The initial draw used the master stream too; a separate index keeps the
    // sampling stream independent of the init.
    let mut rng = streams::stream(cfg.seed, streams::MASTER_STREAM - 1, &cfg.salt);
    let mut tracker = Tracker::new(problem, PowerballGamma::identity(), cfg.record_every, cfg.steps, false)?;
    let scale = match cfg.algo {
        BaselineAlgo::ZoSgd => T::of_usize(p),
        BaselineAlgo::ZoScd => T::one(),
    };
    let two_delta = T::of(2.0) * cfg.delta;
    let limit = T::of(DIVERGENCE_LIMIT);

    tracker.observe(&state);
    for k in 0..cfg.steps {
        let agent = rng.random_range(0..problem.n_agents());
        let sample = SampleRef {
            agent_id: agent,
            sample_index: rng.random_range(0..problem.pool_len(agent)),
        };
        let j = rng.random_range(0..p);
        let x = &mut state.x[0];
        let xj = x[j];
        x[j] = xj + cfg.delta;
        let up = problem.evaluate(sample, x);
        x[j] = xj - cfg.delta;
        let down = problem.evaluate(sample, x);
        let g = scale * (up - down) / two_delta;
        x[j] = xj - cfg.step_size * g;
        if !x[j].is_finite() || x[j].abs() > limit {
            return Err(ZodiacError::Divergence { agent: 0, round: k });
        }
        state.oracle_calls += 2;
        state.k += 1;
        tracker.observe(&state);
    }
    Ok(tracker.finish(state))
}
