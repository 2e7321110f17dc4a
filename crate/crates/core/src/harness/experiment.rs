//! Experiment drivers: seed sweeps, the powerball benchmark and rate sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, TopologyKind};
use super::output::{average_rows, write_metrics_file};
use super::rate::{rate_fit, RateFit};
use crate::error::{Result, ZodiacError};
use crate::estimator::EstimatorConfig;
use crate::optimizer::{
    derive_params, run, streams, AlgoParams, DeltaSchedule, Execution, Init, RunOptions, RunRecord, Zodiac,
};
use crate::powerball::PowerballGamma;
use crate::problems::{
    make_attack_surrogate, make_sigmoid_ls, make_synthetic_nonconvex, read_sigmoid_dataset, AttackSurrogateConfig,
    OracleProblem, ProblemKind, SigmoidLsConfig, SyntheticConfig,
};
use crate::topology::{er_threshold_prob, erdos_renyi, fixture_graph, Topology};

/// A built problem and graph, shared by every seed of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: OracleProblem<f64>,
    pub topology: Topology,
    pub estimator: EstimatorConfig,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<OracleProblem<f64>> {
    if let Some(path) = &cfg.dataset {
        return read_sigmoid_dataset(path);
    }
    match cfg.problem {
        ProblemKind::SigmoidLs => make_sigmoid_ls(&SigmoidLsConfig {
            n_agents: cfg.n_agents,
            samples_per_agent: cfg.samples_per_agent,
            dim: cfg.dim,
            test_size: cfg.test_size,
            seed: cfg.data_seed,
        }),
        ProblemKind::SyntheticNonconvex => make_synthetic_nonconvex(&SyntheticConfig {
            pool_size: cfg.samples_per_agent,
            ..SyntheticConfig::new(cfg.n_agents, cfg.dim, cfg.heterogeneity, cfg.data_seed)
        }),
        ProblemKind::AttackSurrogate => make_attack_surrogate(&AttackSurrogateConfig {
            samples_per_agent: cfg.samples_per_agent,
            ..AttackSurrogateConfig::new(cfg.n_agents, cfg.dim, cfg.n_classes, cfg.c_penalty, cfg.data_seed)
        }),
    }
}

pub fn build_topology(cfg: &ExperimentConfig, n: usize) -> Result<Topology> {
    match cfg.topology {
        TopologyKind::ErdosRenyi => erdos_renyi(n, cfg.er_prob.unwrap_or_else(|| er_threshold_prob(n)), cfg.graph_seed),
        TopologyKind::Fixture(kind) => fixture_graph(kind, n),
    }
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = build_problem(config)?;
        let topology = build_topology(config, problem.n_agents())?;
        let p = problem.dim();
        let estimator = EstimatorConfig::new(p, config.n_c.unwrap_or(p), config.mode)?;
        Ok(Self {
            config: config.clone(),
            problem,
            topology,
            estimator,
        })
    }

    pub fn params(&self, horizon: usize, gamma: f64) -> Result<AlgoParams<f64>> {
        derive_params(
            &self.topology,
            self.problem.dim(),
            horizon,
            PowerballGamma::new(gamma)?,
            &self.config.margins,
        )
    }

    /// One run at `horizon` rounds and exponent `gamma`.
    pub fn run_seed(&self, seed: u64, horizon: usize, gamma: f64) -> Result<RunRecord<f64>> {
        let params = self.params(horizon, gamma)?;
        let delta = if self.config.paper_delta {
            DeltaSchedule::benchmark_constant(horizon, self.problem.dim())
        } else {
            DeltaSchedule::Decaying
        };
        let exec = if self.config.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        };
        let engine = Zodiac::new(&self.problem, &self.topology, params, self.estimator)?
            .with_delta(delta)
            .with_execution(exec);
        let opts = RunOptions {
            seed,
            record_every: self.config.record_every,
            init: if self.config.zero_init { Init::Zeros } else { Init::Gaussian },
            salt: streams::env_salt(),
            wall_clock: self.config.wall_clock,
        };
        run(&engine, &opts)
    }

    /// Runs every seed, in parallel across seeds.
    pub fn run_seeds(&self, horizon: usize, gamma: f64) -> Result<Vec<(u64, RunRecord<f64>)>> {
        self.config
            .seeds
            .par_iter()
            .map(|&s| self.run_seed(s, horizon, gamma).map(|r| (s, r)))
            .collect()
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ZodiacError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// Writes `seed_<s>.csv` per run and `summary.csv`; returns the paths.
pub fn write_seed_csvs(dir: &Path, records: &[(u64, RunRecord<f64>)]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = Vec::with_capacity(records.len() + 1);
    for (seed, rec) in records {
        let path = dir.join(format!("seed_{seed}.csv"));
        write_metrics_file(&rec.rows, &path)?;
        files.push(path);
    }
    let rows: Vec<_> = records.iter().map(|(_, r)| r.rows.as_slice()).collect();
    let path = dir.join("summary.csv");
    write_metrics_file(&average_rows(&rows)?, &path)?;
    files.push(path);
    Ok(files)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<(u64, RunRecord<f64>)>,
    pub files: Vec<PathBuf>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let exp = Experiment::prepare(cfg)?;
    let records = exp.run_seeds(cfg.horizon, cfg.gamma)?;
    let files = write_seed_csvs(&cfg.out, &records)?;
    Ok(RunOutput { records, files })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub seed: u64,
    pub algo: &'static str,
    pub gamma: f64,
    pub final_loss: f64,
    pub final_test_acc: Option<f64>,
    /// First round at which this run's loss reached the baseline's final loss.
    pub rounds_to_baseline_loss: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    pub rows: Vec<BenchmarkRow>,
    pub powerball: Vec<(u64, RunRecord<f64>)>,
    pub baseline: Vec<(u64, RunRecord<f64>)>,
    pub files: Vec<PathBuf>,
}

impl BenchmarkOutput {
    /// Seeds on which powerball ends at or below the baseline loss and gets
    /// there in strictly fewer rounds.
    pub fn powerball_wins(&self) -> usize {
        self.powerball
            .iter()
            .zip(&self.baseline)
            .filter(|((_, pb), (_, base))| {
                let target = base.summary.final_loss;
                pb.summary.final_loss <= target
                    && pb.summary.first_reaching(target).is_some_and(|k| Some(k) < base.summary.first_reaching(target))
            })
            .count()
    }
}

const POWERBALL: &str = "zodiac_pb";
const BASELINE: &str = "zodiac";

/// Powerball at `cfg.gamma` against `γ = 1` with matched seeds. Writes
/// `pb/` and `baseline/` metric directories and `accuracy.csv`.
pub fn benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkOutput> {
    let exp = Experiment::prepare(cfg)?;
    let powerball = exp.run_seeds(cfg.horizon, cfg.gamma)?;
    let baseline = exp.run_seeds(cfg.horizon, 1.0)?;
    let mut files = write_seed_csvs(&cfg.out.join("pb"), &powerball)?;
    files.extend(write_seed_csvs(&cfg.out.join("baseline"), &baseline)?);

    let mut rows = Vec::new();
    for ((seed, pb), (_, base)) in powerball.iter().zip(&baseline) {
        let target = base.summary.final_loss;
        for (algo, gamma, rec) in [(POWERBALL, cfg.gamma, pb), (BASELINE, 1.0, base)] {
            rows.push(BenchmarkRow {
                seed: *seed,
                algo,
                gamma,
                final_loss: rec.summary.final_loss,
                final_test_acc: rec.summary.final_test_acc,
                rounds_to_baseline_loss: rec.summary.first_reaching(target),
            });
        }
    }
    let path = cfg.out.join("accuracy.csv");
    write_benchmark_table(&rows, &path)?;
    files.push(path);
    Ok(BenchmarkOutput {
        rows,
        powerball,
        baseline,
        files,
    })
}

fn write_benchmark_table(rows: &[BenchmarkRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(["seed", "algo", "gamma", "final_loss", "test_acc", "rounds_to_baseline_loss"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.algo.to_string(),
            r.gamma.to_string(),
            r.final_loss.to_string(),
            r.final_test_acc.map(|a| a.to_string()).unwrap_or_default(),
            r.rounds_to_baseline_loss.map(|k| k.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// `(T, seed-averaged time-averaged ‖∇f(x̄)‖²_{1+γ})`.
    pub stationarity: Vec<(f64, f64)>,
    /// `(T, seed-averaged time-averaged consensus error)`.
    pub consensus: Vec<(f64, f64)>,
    pub stationarity_fit: RateFit,
    pub consensus_fit: RateFit,
    pub files: Vec<PathBuf>,
}

/// Runs every horizon in `cfg.horizons` over all seeds and fits the rates.
pub fn rate_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let exp = Experiment::prepare(cfg)?;
    let mut stationarity = Vec::new();
    let mut consensus = Vec::new();
    let mut files = Vec::new();
    for &t in &cfg.horizons {
        let records = exp.run_seeds(t, cfg.gamma)?;
        let m = records.len() as f64;
        stationarity.push((t as f64, records.iter().map(|(_, r)| r.summary.avg_stat_1pg_sq).sum::<f64>() / m));
        consensus.push((t as f64, records.iter().map(|(_, r)| r.summary.avg_consensus_err).sum::<f64>() / m));
        files.extend(write_seed_csvs(&cfg.out.join(format!("T{t}")), &records)?);
    }
    let stationarity_fit = rate_fit(&stationarity)?;
    let consensus_fit = rate_fit(&consensus)?;

    let path = cfg.out.join("rate_fit.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(["metric", "T", "value"])?;
    for (name, pts) in [("stat_1pg_sq", &stationarity), ("consensus_err", &consensus)] {
        for (t, v) in pts.iter() {
            w.write_record([name.to_string(), t.to_string(), v.to_string()])?;
        }
    }
    for (name, fit) in [("stat_1pg_sq_slope", &stationarity_fit), ("consensus_err_slope", &consensus_fit)] {
        w.write_record([name.to_string(), String::new(), fit.slope.to_string()])?;
    }
    w.flush()?;
    files.push(path);
    Ok(SweepOutput {
        stationarity,
        consensus,
        stationarity_fit,
        consensus_fit,
        files,
    })
}
