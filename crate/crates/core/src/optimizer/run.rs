//! Full runs: initialization, the round loop and metric extraction.

use std::time::Instant;

use super::engine::{SwarmState, Zodiac};
use super::streams;
use crate::error::{Result, ZodiacError};
use crate::powerball::{norm_1_plus_gamma_sq, PowerballGamma};
use crate::problems::{gaussian_vec, Diagnostics, ZerothOrderOracle};
use crate::scalar::{norm_sq, Scalar};
use crate::topology::{consensus_projection_norm_sq, row_mean};

/// Starting primal iterates.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init<T> {
    /// i.i.d. `N(0, I_p)` per agent from the master stream.
    #[default]
    Gaussian,
    Zeros,
    Given(Vec<Vec<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions<T> {
    pub seed: u64,
    pub record_every: usize,
    pub init: Init<T>,
    pub salt: String,
    /// Fill `wall_ms`; off by default so output is a pure function of the config.
    pub wall_clock: bool,
}

impl<T> RunOptions<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            record_every: 1,
            init: Init::Gaussian,
            salt: String::new(),
            wall_clock: false,
        }
    }

    pub fn record_every(mut self, r: usize) -> Self {
        self.record_every = r;
        self
    }

    pub fn init(mut self, init: Init<T>) -> Self {
        self.init = init;
        self
    }

    pub fn salt(mut self, salt: impl Into<String>) -> Self {
        self.salt = salt.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow<T> {
    pub k: usize,
    /// `f(x̄_k)`.
    pub mean_loss: T,
    /// `‖∇f(x̄_k)‖²`.
    pub stat_sq: T,
    /// `‖∇f(x̄_k)‖²_{1+γ}`.
    pub stat_1pg_sq: T,
    /// `(1/n) Σᵢ ‖xᵢ − x̄‖²`.
    pub consensus_err: T,
    /// `f(x̄_k) − min_{j≤k} f(x̄_j)`.
    pub subopt: T,
    pub oracle_calls: u64,
    pub test_acc: Option<T>,
    pub wall_ms: u64,
    /// `‖Σᵢ vᵢ‖∞`.
    pub dual_drift: T,
}

/// Whole-run aggregates. Time averages run over `k = 0..T−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub horizon: usize,
    pub avg_stat_sq: T,
    pub avg_stat_1pg_sq: T,
    pub avg_consensus_err: T,
    pub final_loss: T,
    pub final_test_acc: Option<T>,
    /// `f(x̄_k)` for every `k = 0..=T`.
    pub loss_trace: Vec<T>,
    /// `‖∇f(x̄_k)‖²_{1+γ}` for every `k = 0..=T`.
    pub stat_trace: Vec<T>,
    pub max_dual_drift: T,
}

impl<T: Scalar> RunSummary<T> {
    /// First round whose loss is at or below `target`.
    pub fn first_reaching(&self, target: T) -> Option<usize> {
        self.loss_trace.iter().position(|l| *l <= target)
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord<T> {
    pub rows: Vec<MetricsRow<T>>,
    pub summary: RunSummary<T>,
    pub final_state: SwarmState<T>,
}

pub(crate) fn initial_iterates<T: Scalar>(init: &Init<T>, n: usize, p: usize, seed: u64, salt: &str) -> Result<Vec<Vec<T>>> {
    match init {
        Init::Gaussian => {
            let mut rng = streams::master_stream(seed, salt);
            Ok((0..n).map(|_| gaussian_vec(&mut rng, p, 1.0)).collect())
        }
        Init::Zeros => Ok(vec![vec![T::zero(); p]; n]),
        Init::Given(x) => {
            if x.len() != n {
                return Err(ZodiacError::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
            if let Some(row) = x.iter().find(|r| r.len() != p) {
                return Err(ZodiacError::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            Ok(x.clone())
        }
    }
}

/// Accumulates metrics as rounds go by.
pub(crate) struct Tracker<'d, T: Scalar, D: Diagnostics<T> + ?Sized> {
    diag: &'d D,
    gamma: PowerballGamma<T>,
    record_every: usize,
    horizon: usize,
    started: Option<Instant>,
    f_best: T,
    sums: [T; 3],
    rows: Vec<MetricsRow<T>>,
    loss_trace: Vec<T>,
    stat_trace: Vec<T>,
    max_drift: T,
    last_acc: Option<T>,
}

impl<'d, T: Scalar, D: Diagnostics<T> + ?Sized> Tracker<'d, T, D> {
    pub(crate) fn new(diag: &'d D, gamma: PowerballGamma<T>, record_every: usize, horizon: usize, wall_clock: bool) -> Result<Self> {
        if record_every == 0 {
            return Err(ZodiacError::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(Self {
            diag,
            gamma,
            record_every,
            horizon,
            started: wall_clock.then(Instant::now),
            f_best: T::infinity(),
            sums: [T::zero(); 3],
            rows: Vec::new(),
            loss_trace: Vec::with_capacity(horizon + 1),
            stat_trace: Vec::with_capacity(horizon + 1),
            max_drift: T::zero(),
            last_acc: None,
        })
    }

    pub(crate) fn observe(&mut self, state: &SwarmState<T>) {
        let k = state.k;
        let xbar = row_mean(&state.x);
        let loss = self.diag.mean_loss(&xbar);
        let grad = self.diag.full_gradient(&xbar);
        let stat_sq = norm_sq(&grad);
        let stat_1pg = norm_1_plus_gamma_sq(&grad, self.gamma);
        let consensus = consensus_projection_norm_sq(&state.x) / T::of_usize(state.n());
        let drift = state.dual_drift();
        self.f_best = self.f_best.min(loss);
        self.max_drift = self.max_drift.max(drift);
        self.loss_trace.push(loss);
        self.stat_trace.push(stat_1pg);
        if k < self.horizon {
            self.sums[0] += stat_sq;
            self.sums[1] += stat_1pg;
            self.sums[2] += consensus;
        }
        if k % self.record_every == 0 || k == self.horizon {
            let test_acc = self.diag.accuracy(&xbar);
            self.last_acc = test_acc;
            self.rows.push(MetricsRow {
                k,
                mean_loss: loss,
                stat_sq,
                stat_1pg_sq: stat_1pg,
                consensus_err: consensus,
                subopt: loss - self.f_best,
                oracle_calls: state.oracle_calls,
                test_acc,
                wall_ms: self.started.map_or(0, |t| t.elapsed().as_millis() as u64),
                dual_drift: drift,
            });
        }
    }

    pub(crate) fn finish(self, final_state: SwarmState<T>) -> RunRecord<T> {
        let t = T::of_usize(self.horizon.max(1));
        let summary = RunSummary {
            horizon: self.horizon,
            avg_stat_sq: self.sums[0] / t,
            avg_stat_1pg_sq: self.sums[1] / t,
            avg_consensus_err: self.sums[2] / t,
            final_loss: *self.loss_trace.last().expect("at least one observation"),
            final_test_acc: self.last_acc,
            loss_trace: self.loss_trace,
            stat_trace: self.stat_trace,
            max_dual_drift: self.max_drift,
        };
        RunRecord {
            rows: self.rows,
            summary,
            final_state,
        }
    }
}

/// Runs `T = params.horizon()` rounds from a fresh state.
pub fn run<T, P>(engine: &Zodiac<'_, T, P>, opts: &RunOptions<T>) -> Result<RunRecord<T>>
where
    T: Scalar,
    P: ZerothOrderOracle<T> + Diagnostics<T>,
{
    let prm = engine.params();
    let x0 = initial_iterates(&opts.init, prm.n(), prm.p(), opts.seed, &opts.salt)?;
    let state = SwarmState::new(x0, opts.seed, &opts.salt);
    run_from(engine, state, opts)
}

/// Continues from `state` until round `params.horizon()`.
pub fn run_from<T, P>(engine: &Zodiac<'_, T, P>, mut state: SwarmState<T>, opts: &RunOptions<T>) -> Result<RunRecord<T>>
where
    T: Scalar,
    P: ZerothOrderOracle<T> + Diagnostics<T>,
{
    let horizon = engine.params().horizon();
    let mut tracker = Tracker::new(engine.oracle(), engine.params().gamma(), opts.record_every, horizon, opts.wall_clock)?;
    tracker.observe(&state);
    while state.k < horizon {
        engine.step(&mut state)?;
        tracker.observe(&state);
    }
    Ok(tracker.finish(state))
}
