//! Acceptance suite. Runs without the libtest harness so that each criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zodiac_core::estimator::{
    estimate, full_coordinate_estimate, full_coordinate_forward_estimate, sample_coordinates, second_moment_bound,
    EstimatorConfig, EstimatorMode,
};
use zodiac_core::harness::{benchmark, rate_sweep, run_experiment, Experiment, ExperimentConfig, Preset, Task};
use zodiac_core::optimizer::{derive_params, kappa2_upper, min_horizon, run, Execution, ParamMargins, RunOptions, Zodiac};
use zodiac_core::powerball::PowerballGamma;
use zodiac_core::problems::{make_synthetic_nonconvex, SampleRef, SyntheticConfig};
use zodiac_core::topology::{erdos_renyi, Topology};
use zodiac_core::ZodiacError;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn synthetic_cfg(n: usize, p: usize, seed: u64) -> SyntheticConfig {
    SyntheticConfig::new(n, p, 1.0, seed)
}

/// Smooth test function with cross terms, fixed throughout.
fn smooth(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, v) in x.iter().enumerate() {
        s += (v * (1.0 + 0.1 * j as f64)).sin() + 0.25 * v * v * v;
    }
    for w in x.windows(2) {
        s += 0.5 * w[0] * w[1];
    }
    s
}

fn a1() -> Outcome {
    let mut worst: f64 = 0.0;
    let delta = 1e-2;
    for p in 3..=6usize {
        let x: Vec<f64> = (0..p).map(|j| 0.3 * j as f64 - 0.7).collect();
        let full_c = full_coordinate_estimate(smooth, &x, delta).unwrap();
        let full_f = full_coordinate_forward_estimate(smooth, &x, delta).unwrap();
        for n_c in 1..=p {
            for (mode, full) in [(EstimatorMode::Central, &full_c), (EstimatorMode::Forward, &full_f)] {
                let cfg = EstimatorConfig::new(p, n_c, mode).unwrap();
                let mut mean = vec![0.0; p];
                let mut count = 0usize;
                for mask in 0u32..(1 << p) {
                    if mask.count_ones() as usize != n_c {
                        continue;
                    }
                    let subset: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
                    let (g, _) = estimate(&cfg, smooth, &x, delta, &subset).unwrap();
                    mean.iter_mut().zip(&g).for_each(|(m, v)| *m += v);
                    count += 1;
                }
                for (m, f) in mean.iter().zip(full.iter()) {
                    worst = worst.max((m / count as f64 - f).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max subset-mean error {worst:.3e} <= 1e-12"))
}

fn a2() -> Outcome {
    let (n, p, t) = (10, 16, 5000);
    let problem = make_synthetic_nonconvex::<f64>(&synthetic_cfg(n, p, 2)).unwrap();
    let topo = erdos_renyi(n, 0.4, 2).unwrap();
    let prm = derive_params(&topo, p, t, PowerballGamma::new(0.6).unwrap(), &ParamMargins::default()).unwrap();
    let est = EstimatorConfig::new(p, 4, EstimatorMode::Central).unwrap();
    let z = Zodiac::new(&problem, &topo, prm, est).unwrap();
    let rec = run(&z, &RunOptions::new(7)).unwrap();
    let eb = prm.eta() * prm.beta();
    let mut worst_ratio: f64 = 0.0;
    let ok = rec.rows.iter().all(|r| {
        let bound = 1e-9 * (eb * r.k as f64).max(1.0);
        worst_ratio = worst_ratio.max(r.dual_drift / bound);
        r.dual_drift <= bound
    });
    outcome(
        ok && rec.rows.len() == t + 1,
        format!("{} rows, max ‖Σv‖∞ / (1e-9·max(1, ηβk)) = {worst_ratio:.3e} <= 1", rec.rows.len()),
    )
}

fn a3_a4(out: &Path) -> (Outcome, Outcome) {
    let mut cfg = Preset::RateSweep.config();
    cfg.out = out.to_path_buf();
    assert_eq!(cfg.horizons, vec![2000, 8000, 32000]);
    assert_eq!(cfg.seeds.len(), 5);
    let sweep = rate_sweep(&cfg).unwrap();
    let s = sweep.stationarity_fit.slope;
    let c = sweep.consensus_fit.slope;
    (
        outcome(
            (-0.65..=-0.35).contains(&s),
            format!("stationarity slope {s:.4} in [-0.65, -0.35] (r² {:.4})", sweep.stationarity_fit.r_squared),
        ),
        outcome(
            (-1.3..=-0.7).contains(&c),
            format!("consensus slope {c:.4} in [-1.3, -0.7] (r² {:.4})", sweep.consensus_fit.r_squared),
        ),
    )
}

fn a5(out: &Path) -> Outcome {
    let mut cfg = Preset::DeskSigmoid.config();
    cfg.out = out.to_path_buf();
    assert_eq!((cfg.n_agents, cfg.dim, cfg.samples_per_agent, cfg.horizon, cfg.seeds.len()), (20, 20, 200, 500, 5));
    let b = benchmark(&cfg).unwrap();
    let wins = b.powerball_wins();
    let accs: Vec<String> = b
        .rows
        .iter()
        .map(|r| format!("{}:{:.3}", r.algo, r.final_test_acc.unwrap_or(f64::NAN)))
        .collect();
    outcome(wins >= 4, format!("powerball lower final loss and sooner on {wins}/5 seeds (>= 4); acc {}", accs.join(" ")))
}

fn a6() -> Outcome {
    let mut means = Vec::new();
    for n in [5usize, 20, 80] {
        let cfg = ExperimentConfig {
            task: Task::Run,
            n_agents: n,
            dim: 16,
            er_prob: Some(0.4),
            n_c: Some(4),
            gamma: 0.6,
            horizon: 20_000,
            record_every: 20_000,
            seeds: (0..5).collect(),
            margins: ParamMargins {
                enforce_horizon: false,
                ..Default::default()
            },
            ..ExperimentConfig::default()
        };
        let exp = Experiment::prepare(&cfg).unwrap();
        let recs = exp.run_seeds(cfg.horizon, cfg.gamma).unwrap();
        means.push(recs.iter().map(|(_, r)| r.summary.avg_stat_1pg_sq).sum::<f64>() / recs.len() as f64);
    }
    let ok = means.windows(2).all(|w| w[1] <= w[0]);
    outcome(ok, format!("avg stationarity for n = 5, 20, 80: {means:.4?} nonincreasing"))
}

fn a7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_id: f64 = 0.0;
    let mut sandwich = true;
    for g in 0..20 {
        let n = rng.random_range(5..=50usize);
        let prob = rng.random_range(0.15..0.6);
        let topo = erdos_renyi(n, prob, 1000 + g).unwrap();
        let spec = topo.spectrum();
        let keep: Vec<usize> = (0..n).filter(|&k| spec.eigenvalues[k] > 1e-9 * spec.rho).collect();
        let r = spec.eigenvectors.select_columns(&keep);
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            keep.len(),
            keep.iter().map(|&k| 1.0 / spec.eigenvalues[k]),
        ));
        let pinv = &r * inv * r.transpose();
        let k_n = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        worst_id = worst_id.max((&pinv * topo.laplacian() - k_n).norm());
        let mut eig: Vec<f64> = SymmetricEigen::new(pinv).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let (lo, hi) = (1.0 / spec.rho, 1.0 / spec.rho2);
        let tol = 1e-9 * hi;
        sandwich &= eig[0].abs() <= tol && eig[1..].iter().all(|&e| e >= lo - tol && e <= hi + tol);
    }
    outcome(
        worst_id <= 1e-9 && sandwich,
        format!("max ‖RΛ⁻¹RᵀL − K_n‖_F = {worst_id:.3e} <= 1e-9; sandwich [1/ρ, 1/ρ₂] holds: {sandwich}"),
    )
}

fn a8() -> Outcome {
    let p = 16;
    let problem = make_synthetic_nonconvex::<f64>(&synthetic_cfg(4, p, 8)).unwrap();
    let meta = *problem.meta();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let draws = 10_000;
    let delta = 0.05;
    let mut ok = true;
    let mut tightest: f64 = 0.0;
    for point in 0..5 {
        let x: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let agent = point % problem.n_agents();
        let grad = problem.agent_gradient(agent, &x);
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        for n_c in [1, 4, p] {
            let cfg = EstimatorConfig::new(p, n_c, EstimatorMode::Central).unwrap();
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..draws {
                let subset = sample_coordinates(p, n_c, &mut rng).unwrap();
                let sample = SampleRef {
                    agent_id: agent,
                    sample_index: rng.random_range(0..problem.pool_len(agent)),
                };
                let f = problem.oracle(sample).unwrap();
                let (g, _) = estimate(&cfg, f, &x, delta, &subset).unwrap();
                let v: f64 = g.iter().map(|a| a * a).sum();
                sum += v;
                sum_sq += v * v;
            }
            let m = draws as f64;
            let mean = sum / m;
            let se = ((sum_sq / m - mean * mean).max(0.0) / m).sqrt();
            let bound = second_moment_bound(p, n_c, gsq, meta.zeta, meta.smoothness, delta);
            ok &= mean <= bound + 3.0 * se;
            tightest = tightest.max(mean / (bound + 3.0 * se));
        }
    }
    outcome(ok, format!("max E‖gᵉ‖² / (bound + 3·SE) = {tightest:.4} <= 1 over 5 points × n_c ∈ {{1, 4, 16}}"))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn a9(root: &Path) -> Outcome {
    let mut identical = true;
    for preset in [Preset::DeskSigmoid, Preset::AttackDesk] {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let mut cfg = preset.config();
            cfg.seeds = vec![3];
            cfg.out = root.join(format!("{preset:?}-{rep}"));
            match cfg.task {
                Task::Benchmark => drop(benchmark(&cfg).unwrap()),
                _ => drop(run_experiment(&cfg).unwrap()),
            }
            outs.push(dir_bytes(&cfg.out));
        }
        identical &= !outs[0].is_empty() && outs[0] == outs[1];
    }

    let (n, p) = (12, 8);
    let problem = make_synthetic_nonconvex::<f64>(&synthetic_cfg(n, p, 9)).unwrap();
    let topo = erdos_renyi(n, 0.4, 9).unwrap();
    let prm = derive_params(&topo, p, 2000, PowerballGamma::new(0.6).unwrap(), &ParamMargins::default()).unwrap();
    let est = EstimatorConfig::new(p, 3, EstimatorMode::Forward).unwrap();
    let seq = Zodiac::new(&problem, &topo, prm, est).unwrap();
    let par = Zodiac::new(&problem, &topo, prm, est).unwrap().with_execution(Execution::Parallel);
    let a = run(&seq, &RunOptions::new(4).record_every(100)).unwrap();
    let b = run(&par, &RunOptions::new(4).record_every(100)).unwrap();
    let bitwise = a.final_state.same_iterates(&b.final_state);
    outcome(
        identical && bitwise,
        format!("preset CSVs byte-identical across reruns: {identical}; sequential == parallel bitwise: {bitwise}"),
    )
}

fn a10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    let gamma = PowerballGamma::new(0.75).unwrap();
    for g in 0..50 {
        let n = rng.random_range(3..=30usize);
        let prob = rng.random_range(0.2..0.9);
        let topo: Topology = erdos_renyi(n, prob, 500 + g).unwrap();
        let p = rng.random_range(1..=64usize);
        let t = min_horizon(n, p);
        let prm = derive_params(&topo, p, t, gamma, &ParamMargins::default()).unwrap();
        let (rho, rho2) = (topo.rho(), topo.rho2());
        let k1 = prm.kappa1();
        let k2 = prm.kappa2();
        ok &= (k1 - 1.0) * rho2 > 1.0;
        ok &= k1 > 1.0 / rho2 + 1.0;
        ok &= k2 > 0.0 && k2 < 0.2 && k2 < kappa2_upper(k1, rho, rho2);
        ok &= (t as u128) * (p as u128) > (n as u128).pow(3);
        ok &= prm.alpha() == k1 * prm.beta();
        ok &= (prm.eta() * prm.beta() - k2).abs() <= 4.0 * f64::EPSILON * k2;
        let err = derive_params(&topo, p, t - 1, gamma, &ParamMargins::default()).unwrap_err();
        ok &= err == ZodiacError::HorizonTooShort { t: t - 1, min_t: t };
    }
    outcome(ok, "50 graphs: windows respected, T = n³/p boundary rejected with minimal admissible T")
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut failures = 0;
    let mut report = |id: &str, (o, elapsed): (Outcome, Duration), budget_s: u64| {
        let pass = o.pass && elapsed <= Duration::from_secs(budget_s);
        if !pass {
            failures += 1;
        }
        println!(
            "{id} {}: {} [{:.2} s, budget {budget_s} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
        );
    };

    report("A1", timed(a1), 1);
    report("A2", timed(a2), 10);
    // A3 and A4 come from the same sweep and share its budget.
    let ((o3, o4), sweep) = timed(|| a3_a4(&tmp.path().join("sweep")));
    report("A3", (o3, sweep), 300);
    report("A4", (o4, sweep), 300);
    report("A5", timed(|| a5(&tmp.path().join("bench"))), 120);
    report("A6", timed(a6), 600);
    report("A7", timed(a7), 5);
    report("A8", timed(a8), 30);
    report("A9", timed(|| a9(&tmp.path().join("det"))), 600);
    report("A10", timed(a10), 600);

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
