//! Experiment configuration: a flat `key = value` text format, command-line
//! overrides using the same keys, and named presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, ZodiacError};
use crate::estimator::EstimatorMode;
use crate::optimizer::ParamMargins;
use crate::problems::ProblemKind;
use crate::topology::FixtureKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    ErdosRenyi,
    Fixture(FixtureKind),
}

impl FromStr for TopologyKind {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "er" | "erdos-renyi" | "erdos_renyi" => Ok(Self::ErdosRenyi),
            other => other
                .parse()
                .map(Self::Fixture)
                .map_err(|_| ZodiacError::Config(format!("unknown topology {s:?}"))),
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ErdosRenyi => f.write_str("er"),
            Self::Fixture(k) => write!(f, "{}", format!("{k:?}").to_ascii_lowercase()),
        }
    }
}

/// What a configuration asks the runner to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// One run per seed plus a seed-averaged summary.
    Run,
    /// Powerball against the unit-exponent baseline with matched seeds.
    Benchmark,
    /// One [`Task::Run`] per horizon and log-log rate fits.
    RateSweep,
}

impl FromStr for Task {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "run" => Ok(Self::Run),
            "benchmark" => Ok(Self::Benchmark),
            "rate-sweep" | "sweep" => Ok(Self::RateSweep),
            _ => Err(ZodiacError::Config(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperSigmoid,
    DeskSigmoid,
    RateSweep,
    AttackDesk,
}

impl FromStr for Preset {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "paper-sigmoid" => Ok(Self::PaperSigmoid),
            "desk-sigmoid" => Ok(Self::DeskSigmoid),
            "rate-sweep" => Ok(Self::RateSweep),
            "attack-desk" => Ok(Self::AttackDesk),
            _ => Err(ZodiacError::Config(format!("unknown preset {s:?}"))),
        }
    }
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        match self {
            // 500 agents at the connectivity threshold, d = 100, 200 samples
            // each, 10 000 held-out, 500 rounds with δ = 10/√(Td). The
            // horizon bound n³/p is far above 500, so it is not enforced.
            Self::PaperSigmoid => ExperimentConfig {
                task: Task::Benchmark,
                problem: ProblemKind::SigmoidLs,
                n_agents: 500,
                dim: 100,
                samples_per_agent: 200,
                test_size: 10_000,
                topology: TopologyKind::ErdosRenyi,
                er_prob: None,
                n_c: None,
                gamma: 0.6,
                horizon: 500,
                record_every: 10,
                seeds: vec![0],
                paper_delta: true,
                margins: ParamMargins {
                    enforce_horizon: false,
                    ..Default::default()
                },
                ..base
            },
            Self::DeskSigmoid => ExperimentConfig {
                task: Task::Benchmark,
                problem: ProblemKind::SigmoidLs,
                n_agents: 20,
                dim: 20,
                samples_per_agent: 200,
                test_size: 2000,
                topology: TopologyKind::ErdosRenyi,
                er_prob: Some(0.4),
                n_c: None,
                gamma: 0.6,
                horizon: 500,
                record_every: 10,
                seeds: (0..5).collect(),
                paper_delta: true,
                ..base
            },
            Self::RateSweep => ExperimentConfig {
                task: Task::RateSweep,
                problem: ProblemKind::SyntheticNonconvex,
                n_agents: 8,
                dim: 16,
                topology: TopologyKind::ErdosRenyi,
                er_prob: Some(0.5),
                n_c: Some(4),
                gamma: 0.6,
                horizon: 32_000,
                horizons: vec![2000, 8000, 32_000],
                record_every: 100,
                seeds: (0..5).collect(),
                ..base
            },
            Self::AttackDesk => ExperimentConfig {
                task: Task::Run,
                problem: ProblemKind::AttackSurrogate,
                n_agents: 10,
                dim: 64,
                samples_per_agent: 4,
                topology: TopologyKind::ErdosRenyi,
                er_prob: Some(0.4),
                n_c: Some(8),
                gamma: 0.6,
                horizon: 1000,
                record_every: 50,
                seeds: (0..3).collect(),
                zero_init: true,
                margins: ParamMargins {
                    enforce_horizon: false,
                    ..Default::default()
                },
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub problem: ProblemKind,
    pub n_agents: usize,
    pub dim: usize,
    pub samples_per_agent: usize,
    pub test_size: usize,
    pub heterogeneity: f64,
    pub n_classes: usize,
    pub c_penalty: f64,
    pub data_seed: u64,
    /// Import a sigmoid dataset instead of generating one.
    pub dataset: Option<PathBuf>,
    pub topology: TopologyKind,
    /// `None` uses `1.01 ln n / n`.
    pub er_prob: Option<f64>,
    pub graph_seed: u64,
    pub mode: EstimatorMode,
    /// `None` samples every coordinate.
    pub n_c: Option<usize>,
    pub gamma: f64,
    pub horizon: usize,
    /// Horizons of a rate sweep.
    pub horizons: Vec<usize>,
    pub record_every: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub margins: ParamMargins,
    /// Constant `δ = 10/√(Td)` instead of the decaying schedule.
    pub paper_delta: bool,
    pub zero_init: bool,
    pub parallel: bool,
    pub wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Run,
            problem: ProblemKind::SyntheticNonconvex,
            n_agents: 8,
            dim: 16,
            samples_per_agent: 200,
            test_size: 1000,
            heterogeneity: 1.0,
            n_classes: 10,
            c_penalty: 1.0,
            data_seed: 0,
            dataset: None,
            topology: TopologyKind::ErdosRenyi,
            er_prob: None,
            graph_seed: 0,
            mode: EstimatorMode::Central,
            n_c: None,
            gamma: 0.6,
            horizon: 1000,
            horizons: Vec::new(),
            record_every: 10,
            seeds: vec![0],
            out: PathBuf::from("out"),
            margins: ParamMargins::default(),
            paper_delta: false,
            zero_init: false,
            parallel: false,
            wall_clock: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| ZodiacError::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(ZodiacError::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

/// `"0,1,2"`, `"0..5"` (half-open) or a mix of both.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (parse("seeds", a)?, parse("seeds", b)?);
            seeds.extend(a..b);
        } else {
            seeds.push(parse("seeds", part)?);
        }
    }
    Ok(seeds)
}

impl ExperimentConfig {
    /// Sets one key. Keys accept `-` or `_` interchangeably.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "preset" => {
                let out = self.out.clone();
                *self = v.parse::<Preset>()?.config();
                self.out = out;
            }
            "task" => self.task = v.parse()?,
            "problem" => self.problem = v.parse().map_err(|e: ZodiacError| ZodiacError::Config(e.to_string()))?,
            "n_agents" | "n" => self.n_agents = parse(&key, v)?,
            "dim" | "p" | "d" => self.dim = parse(&key, v)?,
            "samples_per_agent" => self.samples_per_agent = parse(&key, v)?,
            "test_size" => self.test_size = parse(&key, v)?,
            "heterogeneity" => self.heterogeneity = parse(&key, v)?,
            "n_classes" => self.n_classes = parse(&key, v)?,
            "c_penalty" => self.c_penalty = parse(&key, v)?,
            "data_seed" => self.data_seed = parse(&key, v)?,
            "dataset" => self.dataset = (!v.is_empty()).then(|| PathBuf::from(v)),
            "topology" => self.topology = v.parse()?,
            "er_prob" => {
                self.er_prob = match v {
                    "" | "auto" | "threshold" => None,
                    _ => Some(parse(&key, v)?),
                }
            }
            "graph_seed" => self.graph_seed = parse(&key, v)?,
            "mode" => self.mode = v.parse().map_err(|e: ZodiacError| ZodiacError::Config(e.to_string()))?,
            "nc" | "n_c" => {
                self.n_c = match v {
                    "" | "all" | "full" => None,
                    _ => Some(parse(&key, v)?),
                }
            }
            "gamma" => self.gamma = parse(&key, v)?,
            "t" | "horizon" => self.horizon = parse(&key, v)?,
            "horizons" => {
                self.horizons = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(&key, s))
                    .collect::<Result<_>>()?
            }
            "record_every" => self.record_every = parse(&key, v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "out" => self.out = PathBuf::from(v),
            "kappa1_margin" => self.margins.kappa1_margin = parse(&key, v)?,
            "kappa2_frac" => self.margins.kappa2_frac = parse(&key, v)?,
            "kappa_delta" => self.margins.kappa_delta = parse(&key, v)?,
            "enforce_horizon" => self.margins.enforce_horizon = parse_bool(&key, v)?,
            "paper_delta" => self.paper_delta = parse_bool(&key, v)?,
            "init" => {
                self.zero_init = match v.to_ascii_lowercase().as_str() {
                    "zeros" | "zero" => true,
                    "gaussian" | "normal" => false,
                    _ => return Err(ZodiacError::Config(format!("invalid init {v:?}"))),
                }
            }
            "parallel" => self.parallel = parse_bool(&key, v)?,
            "wall_clock" => self.wall_clock = parse_bool(&key, v)?,
            _ => return Err(ZodiacError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ZodiacError::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)
                .map_err(|e| ZodiacError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ZodiacError::Config(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.task == Task::RateSweep && self.horizons.len() < 3 {
            return bad(format!("a rate sweep needs at least 3 horizons, got {}", self.horizons.len()));
        }
        if self.dataset.is_some() && self.problem != ProblemKind::SigmoidLs {
            return bad("dataset import is only supported for sigmoid_ls".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_overrides() {
        let mut cfg = ExperimentConfig::from_text(
            "# comment\nproblem = sigmoid\n n-agents = 6 \ndim=3\nseeds = 0..3, 7\nmode = forward\nnc = 2\ner_prob = 0.5 # inline\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, ProblemKind::SigmoidLs);
        assert_eq!(cfg.n_agents, 6);
        assert_eq!(cfg.seeds, vec![0, 1, 2, 7]);
        assert_eq!(cfg.mode, EstimatorMode::Forward);
        assert_eq!(cfg.n_c, Some(2));
        assert_eq!(cfg.er_prob, Some(0.5));
        cfg.set("nc", "all").unwrap();
        assert_eq!(cfg.n_c, None);
        cfg.set("topology", "cycle").unwrap();
        assert_eq!(cfg.topology, TopologyKind::Fixture(FixtureKind::Cycle));
        assert_eq!(cfg.topology.to_string(), "cycle");
    }

    #[test]
    fn errors_name_the_line() {
        let err = ExperimentConfig::from_text("dim = 3\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentConfig::from_text("dim 3").is_err());
        assert!(ExperimentConfig::from_text("gamma = x").is_err());
    }

    #[test]
    fn presets_validate() {
        for p in ["paper-sigmoid", "desk-sigmoid", "rate-sweep", "attack-desk"] {
            p.parse::<Preset>().unwrap().config().validate().unwrap();
        }
        let mut cfg = ExperimentConfig::default();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn preset_key_keeps_output_dir() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("out", "/tmp/x").unwrap();
        cfg.set("preset", "desk-sigmoid").unwrap();
        assert_eq!(cfg.out, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.n_agents, 20);
    }
}
