//! Controlled smooth nonconvex family with closed-form gradients.
//!
//! `fᵢ(x) = ‖x − cᵢ‖²/2 + κ Σⱼ sin²(xⱼ − c_{i,j})`, with centers
//! `cᵢ = c̄ + h·uᵢ`, `Σᵢ uᵢ = 0`, `‖uᵢ‖ ≤ 1`. The stochastic oracle adds
//! `ξᵀx` where `ξ` is uniform on `[−ζ, ζ]^p`; pools are built from antithetic
//! pairs `±ξ` so the pool mean of the noise is exactly zero.
//!
//! The Hessian of `fᵢ` has eigenvalues in `[1 − 2κ, 1 + 2κ]`, so `κ > 1/2`
//! makes the family nonconvex while `f ≥ 0` keeps it bounded below.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gaussian_vec, Model, OracleProblem, ProblemMeta, Sample};
use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_agents: usize,
    pub dim: usize,
    /// Center spread `h`.
    pub heterogeneity: f64,
    /// Curvature weight of the sine term.
    pub kappa_nc: f64,
    /// Per-coordinate noise half-width.
    pub zeta: f64,
    /// Samples per agent; rounded up to an even count.
    pub pool_size: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n_agents: usize, dim: usize, heterogeneity: f64, seed: u64) -> Self {
        Self {
            n_agents,
            dim,
            heterogeneity,
            kappa_nc: 0.75,
            zeta: 0.1,
            pool_size: 200,
            seed,
        }
    }
}

pub(super) fn loss<T: Scalar>(center: &[T], kappa: T, noise: &[T], x: &[T]) -> T {
    let half = T::of(0.5);
    x.iter()
        .zip(center)
        .zip(noise)
        .map(|((&xj, &cj), &nj)| {
            let d = xj - cj;
            let sn = d.sin();
            half * d * d + kappa * sn * sn + nj * xj
        })
        .sum()
}

/// `(x − c) + κ sin(2(x − c)) + ξ`.
pub(super) fn gradient<T: Scalar>(center: &[T], kappa: T, noise: &[T], x: &[T], out: &mut [T]) {
    let two = T::of(2.0);
    for (((o, &xj), &cj), &nj) in out.iter_mut().zip(x).zip(center).zip(noise) {
        let d = xj - cj;
        *o = d + kappa * (two * d).sin() + nj;
    }
}

/// Unit directions summing to zero: antipodal pairs, plus one equilateral
/// triple when `n` is odd. A lone agent (or odd `n` with `p = 1`) leaves the
/// unpaired directions at zero.
fn balanced_directions(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f64> = gaussian_vec(rng, p, 1.0);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            break v.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
        }
    };
    let mut dirs = Vec::with_capacity(n);
    let triple = n % 2 == 1 && n >= 3 && p >= 2;
    let paired = if triple { n - 3 } else { n - n % 2 };
    while dirs.len() < paired {
        let u = unit(rng);
        dirs.push(u.iter().map(|x| -x).collect());
        dirs.push(u);
    }
    if triple {
        // Orthonormal e1, e2 by Gram-Schmidt.
        let e1 = unit(rng);
        let e2 = loop {
            let w = unit(rng);
            let proj: f64 = w.iter().zip(&e1).map(|(a, b)| a * b).sum();
            let r: Vec<f64> = w.iter().zip(&e1).map(|(a, b)| a - proj * b).collect();
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                break r.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
            }
        };
        for k in 0..3 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let (s, c) = theta.sin_cos();
            dirs.push(e1.iter().zip(&e2).map(|(a, b)| c * a + s * b).collect());
        }
    }
    while dirs.len() < n {
        dirs.push(vec![0.0; p]);
    }
    // Re-center to cancel rounding in the triple.
    let mean: Vec<f64> = (0..p).map(|j| dirs.iter().map(|d| d[j]).sum::<f64>() / n as f64).collect();
    if triple {
        for d in dirs.iter_mut() {
            for (x, m) in d.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
    }
    dirs
}

pub(super) fn build<T: Scalar>(cfg: &SyntheticConfig) -> Result<OracleProblem<T>> {
    if cfg.n_agents == 0 || cfg.dim == 0 || cfg.pool_size == 0 {
        return Err(ZodiacError::InvalidArgument(format!(
            "synthetic problem counts must be positive: {cfg:?}"
        )));
    }
    if !(cfg.heterogeneity >= 0.0 && cfg.kappa_nc >= 0.0 && cfg.zeta >= 0.0) {
        return Err(ZodiacError::InvalidArgument(format!(
            "heterogeneity, kappa_nc and zeta must be nonnegative: {cfg:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c_bar: Vec<f64> = gaussian_vec(&mut rng, cfg.dim, 1.0);
    let dirs = balanced_directions(&mut rng, cfg.n_agents, cfg.dim);
    let centers: Vec<Vec<T>> = dirs
        .iter()
        .map(|u| c_bar.iter().zip(u).map(|(c, d)| T::of(c + cfg.heterogeneity * d)).collect())
        .collect();

    let pairs = cfg.pool_size.div_ceil(2);
    let pools: Vec<Vec<Sample<T>>> = (0..cfg.n_agents)
        .map(|_| {
            let mut pool = Vec::with_capacity(2 * pairs);
            for _ in 0..pairs {
                let xi: Vec<f64> = (0..cfg.dim)
                    .map(|_| if cfg.zeta > 0.0 { rng.random_range(-cfg.zeta..=cfg.zeta) } else { 0.0 })
                    .collect();
                pool.push(Sample {
                    features: xi.iter().map(|&v| T::of(v)).collect(),
                    label: 0,
                });
                pool.push(Sample {
                    features: xi.iter().map(|&v| T::of(-v)).collect(),
                    label: 0,
                });
            }
            pool
        })
        .collect();

    let noise_mean = pools
        .iter()
        .map(|pool| {
            let inv = T::one() / T::of_usize(pool.len());
            (0..cfg.dim)
                .map(|j| pool.iter().map(|s| s.features[j]).sum::<T>() * inv)
                .collect()
        })
        .collect();
    let meta = ProblemMeta {
        smoothness: T::of(1.0 + 2.0 * cfg.kappa_nc),
        zeta: T::of(cfg.zeta),
        sigma2: T::of((1.0 + 2.0 * cfg.kappa_nc) * cfg.heterogeneity),
    };
    OracleProblem::assemble(
        cfg.dim,
        pools,
        Model::Synthetic {
            centers,
            kappa_nc: T::of(cfg.kappa_nc),
            noise_mean,
        },
        Some(meta),
    )
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{fd_gradient, rel_err};
    use super::super::SampleRef;
    use super::*;

    fn problem(n: usize, p: usize, h: f64, kappa: f64, zeta: f64, seed: u64) -> OracleProblem<f64> {
        build(&SyntheticConfig {
            kappa_nc: kappa,
            zeta,
            ..SyntheticConfig::new(n, p, h, seed)
        })
        .unwrap()
    }

    fn center_mean(p: &OracleProblem<f64>) -> Vec<f64> {
        match &p.model {
            Model::Synthetic { centers, .. } => crate::topology::row_mean(centers),
            _ => unreachable!(),
        }
    }

    #[test]
    fn homogeneous_quadratic_has_zero_gradient_at_center() {
        let p = problem(5, 4, 0.0, 0.0, 0.0, 3);
        let c = center_mean(&p);
        let g = p.true_full_gradient(&c).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        let r = SampleRef {
            agent_id: 2,
            sample_index: 7,
        };
        assert!(p.oracle_eval(2, &c, r).unwrap().abs() < 1e-15);
        assert!(p.mean_loss(&c).abs() < 1e-15);
    }

    #[test]
    fn directions_balance_for_every_agent_count() {
        for n in 1..12 {
            for p in [1, 2, 5] {
                let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
                let dirs = balanced_directions(&mut rng, n, p);
                assert_eq!(dirs.len(), n);
                for j in 0..p {
                    let s: f64 = dirs.iter().map(|d| d[j]).sum();
                    assert!(s.abs() < 1e-12, "n={n} p={p} sum {s}");
                }
                for d in &dirs {
                    assert!(d.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = problem(6, 8, 0.7, 0.75, 0.1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let x: Vec<f64> = gaussian_vec(&mut rng, 8, 1.5);
            let g = p.true_full_gradient(&x).unwrap();
            let fd = fd_gradient(&p, &x, 1e-5);
            assert!(rel_err(&fd, &g) < 1e-6, "{}", rel_err(&fd, &g));
        }
    }

    #[test]
    fn heterogeneity_certificate_holds() {
        for (n, seed) in [(2, 1), (7, 2), (8, 3), (9, 4)] {
            let p = problem(n, 5, 0.8, 0.75, 0.1, seed);
            let bound = p.meta().sigma2;
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            for _ in 0..100 {
                let x: Vec<f64> = gaussian_vec(&mut rng, 5, 2.0);
                let full = p.true_full_gradient(&x).unwrap();
                for i in 0..n {
                    let gi = p.agent_gradient(i, &x);
                    let dev: f64 = gi.iter().zip(&full).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    assert!(dev <= bound + 1e-12, "n={n}: {dev} > {bound}");
                }
            }
        }
    }

    #[test]
    fn noise_variance_is_bounded_by_zeta_squared() {
        let zeta = 0.1;
        let p = problem(2, 4, 0.5, 0.75, zeta, 5);
        let x = vec![0.3, -0.2, 1.0, 0.0];
        let mean = p.agent_gradient(0, &x);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws = 10_000;
        let mut var = [0.0; 4];
        for _ in 0..draws {
            let r = SampleRef {
                agent_id: 0,
                sample_index: rng.random_range(0..p.pool_len(0)),
            };
            let g = p.sample_gradient_at(r, &x).unwrap();
            for j in 0..4 {
                var[j] += (g[j] - mean[j]).powi(2) / draws as f64;
            }
        }
        for v in var {
            // Uniform noise has variance ζ²/3; the bound allows ζ².
            assert!(v <= zeta * zeta * 1.05, "{v}");
        }
    }

    #[test]
    fn smoothness_and_lower_bound() {
        let p = problem(3, 3, 0.0, 0.75, 0.0, 8);
        assert_eq!(p.meta().smoothness, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x: Vec<f64> = gaussian_vec(&mut rng, 3, 3.0);
            assert!(p.mean_loss(&x) >= 0.0);
        }
    }

    #[test]
    fn oracle_is_pure() {
        let p = problem(3, 3, 0.4, 0.75, 0.1, 8);
        let r = SampleRef {
            agent_id: 1,
            sample_index: 3,
        };
        let x = [0.1, 0.2, 0.3];
        assert_eq!(p.oracle_eval(1, &x, r).unwrap(), p.oracle_eval(1, &x, r).unwrap());
    }
}
