//! Synchronous primal-dual rounds.
//!
//! Each round every agent `i`, reading only the round-`k` snapshot:
//!
//! 1. forms `(Lx)ᵢ = Σⱼ L_ij x_j` over the nonzero row entries in column order;
//! 2. draws a coordinate subset, then a sample index, from its own stream;
//! 3. estimates `gᵢ` with smoothing radius `δ_k`;
//! 4. `xᵢ ← xᵢ − η (α (Lx)ᵢ + β vᵢ + σ(gᵢ, γ))`;
//! 5. `vᵢ ← vᵢ + (ηβ) (Lx)ᵢ`.
//!
//! Updates are committed after all agents finish, so sequential and parallel
//! execution are bitwise identical.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::params::AlgoParams;
use super::streams;
use crate::error::{Result, ZodiacError};
use crate::estimator::{estimate, sample_coordinates, EstimatorConfig};
use crate::powerball::powerball_in_place;
use crate::problems::{SampleRef, ZerothOrderOracle};
use crate::scalar::Scalar;
use crate::topology::Topology;

/// Any coordinate beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSchedule<T> {
    /// `κ_δ / (p n (k+1))^{1/4}`.
    Decaying,
    Constant(T),
}

impl<T: Scalar> DeltaSchedule<T> {
    /// `10 / √(T d)`, the constant smoothing of the classification benchmark.
    pub fn benchmark_constant(horizon: usize, dim: usize) -> Self {
        Self::Constant(T::of(10.0 / ((horizon * dim) as f64).sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

/// Per-agent primal and dual iterates at round `k`.
#[derive(Debug, Clone)]
pub struct SwarmState<T> {
    pub k: usize,
    pub x: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub oracle_calls: u64,
    rngs: Vec<ChaCha8Rng>,
}

impl<T: Scalar> SwarmState<T> {
    /// Starts from `x0` with zero duals and per-agent streams split from `seed`.
    pub fn new(x0: Vec<Vec<T>>, seed: u64, salt: &str) -> Self {
        let p = x0.first().map_or(0, Vec::len);
        let rngs = (0..x0.len()).map(|i| streams::agent_stream(seed, i, salt)).collect();
        Self {
            k: 0,
            v: vec![vec![T::zero(); p]; x0.len()],
            x: x0,
            oracle_calls: 0,
            rngs,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `‖Σᵢ vᵢ‖∞`.
    pub fn dual_drift(&self) -> T {
        let p = self.v.first().map_or(0, Vec::len);
        (0..p)
            .map(|d| self.v.iter().map(|row| row[d]).sum::<T>().abs())
            .fold(T::zero(), T::max)
    }

    /// Exact equality of iterates, counters and round index.
    pub fn same_iterates(&self, other: &Self) -> bool {
        let bits = |a: &[Vec<T>], b: &[Vec<T>]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(r, s)| {
                    r.len() == s.len() && r.iter().zip(s).all(|(x, y)| x.to_f64().map(f64::to_bits) == y.to_f64().map(f64::to_bits))
                })
        };
        self.k == other.k && self.oracle_calls == other.oracle_calls && bits(&self.x, &other.x) && bits(&self.v, &other.v)
    }
}

struct AgentUpdate<T> {
    x: Vec<T>,
    v: Vec<T>,
    calls: usize,
}

/// A configured primal-dual system over one oracle and one graph.
pub struct Zodiac<'a, T: Scalar, O: ZerothOrderOracle<T>> {
    oracle: &'a O,
    rows: Vec<Vec<(usize, T)>>,
    params: AlgoParams<T>,
    estimator: EstimatorConfig,
    delta: DeltaSchedule<T>,
    execution: Execution,
}

impl<'a, T: Scalar, O: ZerothOrderOracle<T>> Zodiac<'a, T, O> {
    pub fn new(oracle: &'a O, topology: &Topology, params: AlgoParams<T>, estimator: EstimatorConfig) -> Result<Self> {
        if topology.n() != oracle.n_agents() {
            return Err(ZodiacError::DimensionMismatch {
                expected: oracle.n_agents(),
                got: topology.n(),
            });
        }
        if estimator.p() != oracle.dim() || params.p() != oracle.dim() {
            return Err(ZodiacError::DimensionMismatch {
                expected: oracle.dim(),
                got: if estimator.p() != oracle.dim() { estimator.p() } else { params.p() },
            });
        }
        if params.n() != topology.n() {
            return Err(ZodiacError::DimensionMismatch {
                expected: topology.n(),
                got: params.n(),
            });
        }
        Ok(Self {
            oracle,
            rows: topology.laplacian_rows(),
            params,
            estimator,
            delta: DeltaSchedule::Decaying,
            execution: Execution::Sequential,
        })
    }

    pub fn with_delta(mut self, delta: DeltaSchedule<T>) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn params(&self) -> &AlgoParams<T> {
        &self.params
    }

    pub fn oracle(&self) -> &'a O {
        self.oracle
    }

    pub fn delta_at(&self, k: usize) -> T {
        match self.delta {
            DeltaSchedule::Decaying => self.params.delta_at(k),
            DeltaSchedule::Constant(d) => d,
        }
    }

    fn agent_update(&self, i: usize, state_x: &[Vec<T>], v_i: &[T], rng: &mut ChaCha8Rng, k: usize) -> Result<AgentUpdate<T>> {
        let p = self.estimator.p();
        let mut lx = vec![T::zero(); p];
        for &(j, l) in &self.rows[i] {
            for (acc, &xj) in lx.iter_mut().zip(&state_x[j]) {
                *acc += l * xj;
            }
        }

        let subset = sample_coordinates(p, self.estimator.n_c(), rng)?;
        let sample = SampleRef {
            agent_id: i,
            sample_index: rng.random_range(0..self.oracle.pool_len(i)),
        };
        let eval = |x: &[T]| self.oracle.evaluate(sample, x);
        let (mut g, calls) = estimate(&self.estimator, eval, &state_x[i], self.delta_at(k), &subset).map_err(|e| match e {
            ZodiacError::NonFinite(_) => ZodiacError::Divergence { agent: i, round: k },
            other => other,
        })?;
        powerball_in_place(&mut g, self.params.gamma()).map_err(|_| ZodiacError::Divergence { agent: i, round: k })?;

        let (eta, alpha, beta) = (self.params.eta(), self.params.alpha(), self.params.beta());
        let dual_gain = eta * beta;
        let limit = T::of(DIVERGENCE_LIMIT);
        let mut x_new = Vec::with_capacity(p);
        let mut v_new = Vec::with_capacity(p);
        for d in 0..p {
            let xd = state_x[i][d] - eta * (alpha * lx[d] + beta * v_i[d] + g[d]);
            if !xd.is_finite() || xd.abs() > limit {
                return Err(ZodiacError::Divergence { agent: i, round: k });
            }
            x_new.push(xd);
            v_new.push(v_i[d] + dual_gain * lx[d]);
        }
        Ok(AgentUpdate {
            x: x_new,
            v: v_new,
            calls,
        })
    }

    /// Advances `state` by one synchronous round.
    pub fn step(&self, state: &mut SwarmState<T>) -> Result<()> {
        let n = self.rows.len();
        if state.n() != n || state.x.iter().any(|r| r.len() != self.estimator.p()) {
            return Err(ZodiacError::DimensionMismatch {
                expected: n,
                got: state.n(),
            });
        }
        let k = state.k;
        let x_snap = &state.x;
        let v_snap = &state.v;
        let updates: Vec<Result<AgentUpdate<T>>> = match self.execution {
            Execution::Sequential => state
                .rngs
                .iter_mut()
                .enumerate()
                .map(|(i, rng)| self.agent_update(i, x_snap, &v_snap[i], rng, k))
                .collect(),
            Execution::Parallel => state
                .rngs
                .par_iter_mut()
                .enumerate()
                .map(|(i, rng)| self.agent_update(i, x_snap, &v_snap[i], rng, k))
                .collect(),
        };
        let updates = updates.into_iter().collect::<Result<Vec<_>>>()?;
        for (i, u) in updates.into_iter().enumerate() {
            state.x[i] = u.x;
            state.v[i] = u.v;
            state.oracle_calls += u.calls as u64;
        }
        state.k += 1;
        Ok(())
    }
}
