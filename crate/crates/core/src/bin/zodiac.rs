//! Command-line experiment runner.
//!
//! Settings are layered: defaults, then `--preset`, then `--config`, then
//! individual flags and `--set key=value` pairs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use zodiac_core::harness::{benchmark, build_problem, build_topology, rate_sweep, run_experiment, ExperimentConfig, Task};
use zodiac_core::problems::write_dataset_csv;
use zodiac_core::{Result, ZodiacError};

#[derive(Debug, Parser)]
#[command(name = "zodiac", version, about = "Distributed zeroth-order primal-dual optimization experiments")]
struct Cli {
    /// Named preset: paper-sigmoid, desk-sigmoid, rate-sweep, attack-desk.
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sigmoid_ls, synthetic_nonconvex or attack_surrogate.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n_agents: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// er, path, complete, cycle or star.
    #[arg(long)]
    topology: Option<String>,
    /// Edge probability, or `auto` for 1.01 ln n / n.
    #[arg(long)]
    er_prob: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Coordinates per estimate, or `all`.
    #[arg(long)]
    nc: Option<String>,
    /// forward or central.
    #[arg(long)]
    mode: Option<String>,
    /// Horizon T.
    #[arg(long)]
    t: Option<String>,
    /// Seeds, e.g. `0,1,2` or `0..5`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    /// Constant smoothing 10/√(Td) instead of the decaying schedule.
    #[arg(long)]
    paper_delta: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read a sigmoid dataset CSV instead of generating one.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Any configuration key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Process agents in parallel within each round.
    #[arg(long)]
    parallel: bool,
    /// Record elapsed milliseconds (makes output time dependent).
    #[arg(long)]
    wall_clock: bool,
    /// Write the communication graph as an edge list and exit.
    #[arg(long)]
    export_graph: Option<PathBuf>,
    /// Write the generated dataset as CSV and exit.
    #[arg(long)]
    export_dataset: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = &cli.preset {
        cfg.set("preset", p)?;
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| ZodiacError::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    let flags = [
        ("problem", &cli.problem),
        ("n_agents", &cli.n_agents),
        ("dim", &cli.dim),
        ("topology", &cli.topology),
        ("er_prob", &cli.er_prob),
        ("gamma", &cli.gamma),
        ("nc", &cli.nc),
        ("mode", &cli.mode),
        ("t", &cli.t),
        ("seeds", &cli.seeds),
        ("record_every", &cli.record_every),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for kv in &cli.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ZodiacError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(d) = &cli.dataset {
        cfg.dataset = Some(d.clone());
    }
    cfg.paper_delta |= cli.paper_delta;
    cfg.parallel |= cli.parallel;
    cfg.wall_clock |= cli.wall_clock;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = build_config(cli)?;
    if cli.export_graph.is_some() || cli.export_dataset.is_some() {
        let problem = build_problem(&cfg)?;
        if let Some(path) = &cli.export_graph {
            build_topology(&cfg, problem.n_agents())?.write_edge_list(path)?;
            println!("wrote {}", path.display());
        }
        if let Some(path) = &cli.export_dataset {
            let file = std::fs::File::create(path).map_err(|e| ZodiacError::Io(format!("{}: {e}", path.display())))?;
            write_dataset_csv(&problem, std::io::BufWriter::new(file))?;
            println!("wrote {}", path.display());
        }
        return Ok(());
    }
    match cfg.task {
        Task::Run => {
            let out = run_experiment(&cfg)?;
            for (seed, rec) in &out.records {
                println!(
                    "seed {seed}: final_loss {} avg_stat_1pg_sq {} avg_consensus_err {}",
                    rec.summary.final_loss, rec.summary.avg_stat_1pg_sq, rec.summary.avg_consensus_err
                );
            }
            println!("wrote {} files under {}", out.files.len(), cfg.out.display());
        }
        Task::Benchmark => {
            let out = benchmark(&cfg)?;
            println!("seed  algo       gamma  final_loss  test_acc");
            for r in &out.rows {
                let acc = r.final_test_acc.map(|a| format!("{:.4}", a)).unwrap_or_else(|| "-".into());
                println!("{:<5} {:<10} {:<6} {:<11.6} {acc}", r.seed, r.algo, r.gamma, r.final_loss);
            }
            println!(
                "powerball reached the baseline's final loss sooner on {} of {} seeds",
                out.powerball_wins(),
                out.powerball.len()
            );
            println!("wrote {} files under {}", out.files.len(), cfg.out.display());
        }
        Task::RateSweep => {
            let out = rate_sweep(&cfg)?;
            println!(
                "stationarity slope {:.4} (r² {:.4}); consensus slope {:.4} (r² {:.4})",
                out.stationarity_fit.slope,
                out.stationarity_fit.r_squared,
                out.consensus_fit.slope,
                out.consensus_fit.r_squared
            );
            println!("wrote {} files under {}", out.files.len(), cfg.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zodiac: error: {e}");
            ExitCode::FAILURE
        }
    }
}
