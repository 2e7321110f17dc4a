//! Black-box binary classification with a sigmoid least-squares loss:
//! `F(x, (a, y)) = (y − φ(aᵀx))²`, `φ(t) = 1 / (1 + e^{−t})`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{gaussian_vec, Model, OracleProblem, Sample};
use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SigmoidLsConfig {
    pub n_agents: usize,
    pub samples_per_agent: usize,
    pub dim: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl SigmoidLsConfig {
    /// 500 agents, 200 samples each, `d = 100`, 10 000 test samples.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            n_agents: 500,
            samples_per_agent: 200,
            dim: 100,
            test_size: 10_000,
            seed,
        }
    }
}

#[inline]
pub(super) fn sigmoid<T: Scalar>(t: T) -> T {
    T::one() / (T::one() + (-t).exp())
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn label_of<T: Scalar>(y: usize) -> T {
    if y == 1 {
        T::one()
    } else {
        T::zero()
    }
}

pub(super) fn loss<T: Scalar>(s: &Sample<T>, x: &[T]) -> T {
    let r = label_of::<T>(s.label) - sigmoid(dot(&s.features, x));
    r * r
}

/// `−2 (y − φ) φ (1 − φ) a`.
pub(super) fn gradient<T: Scalar>(s: &Sample<T>, x: &[T], out: &mut [T]) {
    let phi = sigmoid(dot(&s.features, x));
    let coef = -T::of(2.0) * (label_of::<T>(s.label) - phi) * phi * (T::one() - phi);
    for (o, a) in out.iter_mut().zip(&s.features) {
        *o = coef * *a;
    }
}

/// Ties at `φ = 0.5` predict the positive class.
pub(super) fn predict<T: Scalar>(features: &[T], x: &[T]) -> usize {
    usize::from(sigmoid(dot(features, x)) >= T::of(0.5))
}

pub(super) fn accuracy<T: Scalar>(test_set: &[Sample<T>], x: &[T]) -> T {
    if test_set.is_empty() {
        return T::nan();
    }
    let hits = test_set
        .iter()
        .filter(|s| predict(&s.features, x) == s.label)
        .count();
    T::of_usize(hits) / T::of_usize(test_set.len())
}

fn draw<T: Scalar>(rng: &mut ChaCha8Rng, dim: usize, x_opt: &[T]) -> Sample<T> {
    let features = gaussian_vec(rng, dim, 1.0);
    let label = predict(&features, x_opt);
    Sample { features, label }
}

pub(super) fn build<T: Scalar>(cfg: &SigmoidLsConfig) -> Result<OracleProblem<T>> {
    if cfg.n_agents == 0 || cfg.samples_per_agent == 0 || cfg.dim == 0 || cfg.test_size == 0 {
        return Err(ZodiacError::InvalidArgument(format!(
            "sigmoid_ls counts must be positive: {cfg:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x_opt = vec![T::one(); cfg.dim];
    let pools = (0..cfg.n_agents)
        .map(|_| (0..cfg.samples_per_agent).map(|_| draw(&mut rng, cfg.dim, &x_opt)).collect())
        .collect();
    let test_set = (0..cfg.test_size).map(|_| draw(&mut rng, cfg.dim, &x_opt)).collect();
    OracleProblem::assemble(cfg.dim, pools, Model::Sigmoid { test_set }, None)
}

/// Rebuilds a problem from already-drawn samples (dataset import).
pub(super) fn from_samples<T: Scalar>(
    dim: usize,
    pools: Vec<Vec<Sample<T>>>,
    test_set: Vec<Sample<T>>,
) -> Result<OracleProblem<T>> {
    if let Some(bad) = pools.iter().flatten().chain(&test_set).find(|s| s.label > 1) {
        return Err(ZodiacError::InvalidArgument(format!(
            "sigmoid_ls labels must be 0 or 1, got {}",
            bad.label
        )));
    }
    OracleProblem::assemble(dim, pools, Model::Sigmoid { test_set }, None)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{fd_gradient, rel_err};
    use super::super::SampleRef;
    use super::*;

    fn small() -> OracleProblem<f64> {
        build(&SigmoidLsConfig {
            n_agents: 4,
            samples_per_agent: 30,
            dim: 6,
            test_size: 2000,
            seed: 9,
        })
        .unwrap()
    }

    #[test]
    fn loss_at_origin_is_quarter() {
        let p = small();
        let x = vec![0.0; 6];
        for agent in 0..4 {
            for k in 0..p.pool_len(agent) {
                let r = SampleRef {
                    agent_id: agent,
                    sample_index: k,
                };
                assert_eq!(p.oracle_eval(agent, &x, r).unwrap(), 0.25);
            }
        }
        assert_eq!(p.oracle_calls(), 120);
    }

    #[test]
    fn optimum_classifies_everything() {
        let p = small();
        assert_eq!(p.test_accuracy(&[1.0; 6]).unwrap(), 1.0);
        for s in p.samples(0) {
            let margin: f64 = s.features.iter().sum();
            assert_eq!(s.label, usize::from(margin >= 0.0));
        }
    }

    #[test]
    fn flipped_optimum_misclassifies_everything() {
        let p = small();
        let acc = p.test_accuracy(&[-1.0; 6]).unwrap();
        let ties = p.test_set().iter().filter(|s| s.features.iter().sum::<f64>() == 0.0).count();
        assert_eq!(acc, ties as f64 / 2000.0);
        assert!(acc < 1e-3);
    }

    #[test]
    fn origin_accuracy_is_positive_fraction() {
        let p = small();
        let positives = p.test_set().iter().filter(|s| s.label == 1).count() as f64 / 2000.0;
        assert_eq!(p.test_accuracy(&[0.0; 6]).unwrap(), positives);
        assert!((positives - 0.5).abs() < 0.05);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = gaussian_vec(&mut rng, 6, 1.0);
            let g = p.true_full_gradient(&x).unwrap();
            let fd = fd_gradient(&p, &x, 1e-5);
            assert!(rel_err(&fd, &g) < 1e-5);
        }
    }

    #[test]
    fn losses_lie_in_unit_interval() {
        let p = small();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x: Vec<f64> = gaussian_vec(&mut rng, 6, 3.0);
            for s in p.samples(1) {
                let l = loss(s, &x);
                assert!((0.0..=1.0).contains(&l));
            }
        }
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let p = small();
        let r = SampleRef {
            agent_id: 0,
            sample_index: 0,
        };
        assert!(p.oracle_eval(0, &[0.0; 5], r).is_err());
        assert!(p.oracle_eval(1, &[0.0; 6], r).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = small();
        let b = small();
        assert_eq!(a.samples(3), b.samples(3));
        assert_eq!(a.test_set(), b.test_set());
    }
}
