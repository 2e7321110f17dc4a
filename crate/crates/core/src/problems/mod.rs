//! Stochastic zeroth-order oracle problems.
//!
//! Every problem is a finite-sum objective `f(x) = (1/n) Σᵢ fᵢ(x)` where each
//! agent's `fᵢ` is the mean of `Fᵢ(x, ξ)` over the agent's private sample pool.
//! The optimizer only ever sees `Fᵢ(·, ξ)` through [`OracleProblem::oracle`];
//! gradients exist purely as diagnostics for metric computation.

mod attack;
mod dataset;
mod sigmoid;
mod synthetic;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

pub use attack::{attack_transform, AttackSurrogateConfig, PIXEL_CLAMP};
pub use dataset::{read_sigmoid_dataset, write_dataset_csv, DATASET_TEST_AGENT};
pub use sigmoid::SigmoidLsConfig;
pub use synthetic::SyntheticConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    SigmoidLs,
    SyntheticNonconvex,
    AttackSurrogate,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SigmoidLs => "sigmoid_ls",
            Self::SyntheticNonconvex => "synthetic_nonconvex",
            Self::AttackSurrogate => "attack_surrogate",
        })
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid_ls" | "sigmoid" => Ok(Self::SigmoidLs),
            "synthetic_nonconvex" | "synthetic" => Ok(Self::SyntheticNonconvex),
            "attack_surrogate" | "attack" => Ok(Self::AttackSurrogate),
            other => Err(ZodiacError::InvalidArgument(format!("unknown problem kind '{other}'"))),
        }
    }
}

/// One draw `ξ`: a feature vector plus an integer label (unused by the
/// synthetic problem).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub features: Vec<T>,
    pub label: usize,
}

/// Identifies a drawn `ξ_{i,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRef {
    pub agent_id: usize,
    pub sample_index: usize,
}

/// Diagnostic constants. Exact for the synthetic problem, empirical
/// estimates otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemMeta<T> {
    /// Smoothness constant `L_f`.
    pub smoothness: T,
    /// Per-coordinate gradient-noise bound `ζ`.
    pub zeta: T,
    /// Heterogeneity bound `σ₂` on `‖∇fᵢ − ∇f‖`.
    pub sigma2: T,
}

#[derive(Debug, Clone)]
pub(crate) enum Model<T> {
    Sigmoid {
        test_set: Vec<Sample<T>>,
    },
    Synthetic {
        centers: Vec<Vec<T>>,
        kappa_nc: T,
        /// Pool mean of the noise per agent; the loss is affine in `ξ`, so
        /// `fᵢ` is the loss at this mean.
        noise_mean: Vec<Vec<T>>,
    },
    Attack {
        weights: Vec<Vec<T>>,
        bias: Vec<T>,
        c_penalty: T,
    },
}

/// A stochastic zeroth-order objective distributed over `n_agents` agents.
#[derive(Debug)]
pub struct OracleProblem<T> {
    p: usize,
    pools: Vec<Vec<Sample<T>>>,
    meta: ProblemMeta<T>,
    model: Model<T>,
    calls: AtomicU64,
}

impl<T: Scalar> Clone for OracleProblem<T> {
    fn clone(&self) -> Self {
        Self {
            p: self.p,
            pools: self.pools.clone(),
            meta: self.meta,
            model: self.model.clone(),
            calls: AtomicU64::new(self.calls.load(Ordering::Relaxed)),
        }
    }
}

impl<T: Scalar> OracleProblem<T> {
    /// Validates pools and fills diagnostic metadata, estimating it
    /// empirically unless `meta` is given.
    pub(crate) fn assemble(
        p: usize,
        pools: Vec<Vec<Sample<T>>>,
        model: Model<T>,
        meta: Option<ProblemMeta<T>>,
    ) -> Result<Self> {
        if p == 0 || pools.is_empty() {
            return Err(ZodiacError::InvalidArgument(
                "problem needs p >= 1 and at least one agent".into(),
            ));
        }
        for (i, pool) in pools.iter().enumerate() {
            if pool.is_empty() {
                return Err(ZodiacError::InvalidArgument(format!("agent {i} has an empty sample pool")));
            }
            if let Some(s) = pool.iter().find(|s| s.features.len() != p) {
                return Err(ZodiacError::DimensionMismatch {
                    expected: p,
                    got: s.features.len(),
                });
            }
        }
        let placeholder = ProblemMeta {
            smoothness: T::nan(),
            zeta: T::nan(),
            sigma2: T::nan(),
        };
        let mut problem = Self {
            p,
            pools,
            meta: placeholder,
            model,
            calls: AtomicU64::new(0),
        };
        problem.meta = match meta {
            Some(m) => m,
            None => problem.estimate_meta(),
        };
        Ok(problem)
    }

    pub fn kind(&self) -> ProblemKind {
        match self.model {
            Model::Sigmoid { .. } => ProblemKind::SigmoidLs,
            Model::Synthetic { .. } => ProblemKind::SyntheticNonconvex,
            Model::Attack { .. } => ProblemKind::AttackSurrogate,
        }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn n_agents(&self) -> usize {
        self.pools.len()
    }

    pub fn meta(&self) -> &ProblemMeta<T> {
        &self.meta
    }

    pub fn pool_len(&self, agent: usize) -> usize {
        self.pools[agent].len()
    }

    pub fn samples(&self, agent: usize) -> &[Sample<T>] {
        &self.pools[agent]
    }

    /// Total oracle evaluations served so far, across all threads.
    pub fn oracle_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn check_ref(&self, sample: SampleRef) -> Result<()> {
        if sample.agent_id >= self.n_agents() {
            return Err(ZodiacError::InvalidArgument(format!(
                "agent {} out of range ({} agents)",
                sample.agent_id,
                self.n_agents()
            )));
        }
        if sample.sample_index >= self.pool_len(sample.agent_id) {
            return Err(ZodiacError::InvalidArgument(format!(
                "sample {} out of range for agent {}",
                sample.sample_index, sample.agent_id
            )));
        }
        Ok(())
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.p {
            return Err(ZodiacError::DimensionMismatch {
                expected: self.p,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `Fᵢ(x, ξ)` for the referenced sample. Counts one oracle call.
    pub fn oracle_eval(&self, agent_id: usize, x: &[T], sample: SampleRef) -> Result<T> {
        if sample.agent_id != agent_id {
            return Err(ZodiacError::InvalidArgument(format!(
                "agent {agent_id} cannot evaluate agent {}'s sample",
                sample.agent_id
            )));
        }
        self.check_ref(sample)?;
        self.check_dim(x)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.sample_loss(&self.pools[agent_id][sample.sample_index], agent_id, x))
    }

    /// Black-box closure `x ↦ Fᵢ(x, ξ)` with `ξ` fixed. This is the only view
    /// of the problem the optimizer uses for its updates.
    pub fn oracle(&self, sample: SampleRef) -> Result<impl Fn(&[T]) -> T + '_> {
        self.check_ref(sample)?;
        let s = &self.pools[sample.agent_id][sample.sample_index];
        Ok(move |x: &[T]| {
            self.calls.fetch_add(1, Ordering::Relaxed);
            self.sample_loss(s, sample.agent_id, x)
        })
    }

    fn sample_loss(&self, s: &Sample<T>, agent: usize, x: &[T]) -> T {
        match &self.model {
            Model::Sigmoid { .. } => sigmoid::loss(s, x),
            Model::Synthetic { centers, kappa_nc, .. } => synthetic::loss(&centers[agent], *kappa_nc, &s.features, x),
            Model::Attack {
                weights,
                bias,
                c_penalty,
            } => attack::loss(weights, bias, *c_penalty, s, x),
        }
    }

    fn sample_gradient(&self, s: &Sample<T>, agent: usize, x: &[T], out: &mut [T]) {
        match &self.model {
            Model::Sigmoid { .. } => sigmoid::gradient(s, x, out),
            Model::Synthetic { centers, kappa_nc, .. } => {
                synthetic::gradient(&centers[agent], *kappa_nc, &s.features, x, out)
            }
            Model::Attack {
                weights,
                bias,
                c_penalty,
            } => attack::gradient(weights, bias, *c_penalty, s, x, out),
        }
    }

    /// Noiseless `fᵢ(x)`: the mean of `Fᵢ(x, ξ)` over agent `i`'s pool.
    pub fn agent_loss(&self, agent: usize, x: &[T]) -> T {
        if let Model::Synthetic {
            centers,
            kappa_nc,
            noise_mean,
        } = &self.model
        {
            return synthetic::loss(&centers[agent], *kappa_nc, &noise_mean[agent], x);
        }
        let pool = &self.pools[agent];
        let total: T = pool.iter().map(|s| self.sample_loss(s, agent, x)).sum();
        total / T::of_usize(pool.len())
    }

    /// Noiseless `f(x) = (1/n) Σᵢ fᵢ(x)`.
    pub fn mean_loss(&self, x: &[T]) -> T {
        let total: T = (0..self.n_agents()).map(|i| self.agent_loss(i, x)).sum();
        total / T::of_usize(self.n_agents())
    }

    /// `∇fᵢ(x)`. Diagnostics only.
    pub fn agent_gradient(&self, agent: usize, x: &[T]) -> Vec<T> {
        let mut acc = vec![T::zero(); self.p];
        if let Model::Synthetic {
            centers,
            kappa_nc,
            noise_mean,
        } = &self.model
        {
            synthetic::gradient(&centers[agent], *kappa_nc, &noise_mean[agent], x, &mut acc);
            return acc;
        }
        let pool = &self.pools[agent];
        let mut buf = vec![T::zero(); self.p];
        for s in pool {
            self.sample_gradient(s, agent, x, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += *b;
            }
        }
        let inv = T::one() / T::of_usize(pool.len());
        acc.iter_mut().for_each(|a| *a *= inv);
        acc
    }

    /// `∇_x Fᵢ(x, ξ)` for a single sample. Diagnostics only.
    pub fn sample_gradient_at(&self, sample: SampleRef, x: &[T]) -> Result<Vec<T>> {
        self.check_ref(sample)?;
        self.check_dim(x)?;
        let mut out = vec![T::zero(); self.p];
        self.sample_gradient(&self.pools[sample.agent_id][sample.sample_index], sample.agent_id, x, &mut out);
        Ok(out)
    }

    /// Exact `∇f(x)` of the noiseless mean objective. Diagnostics only.
    pub fn true_full_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let mut acc = vec![T::zero(); self.p];
        for i in 0..self.n_agents() {
            for (a, b) in acc.iter_mut().zip(self.agent_gradient(i, x)) {
                *a += b;
            }
        }
        let inv = T::one() / T::of_usize(self.n_agents());
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(acc)
    }

    /// Held-out accuracy of the sigmoid classifier at `x`.
    pub fn test_accuracy(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        match &self.model {
            Model::Sigmoid { test_set } => Ok(sigmoid::accuracy(test_set, x)),
            _ => Err(ZodiacError::InvalidArgument(format!(
                "test accuracy is only defined for sigmoid_ls, not {}",
                self.kind()
            ))),
        }
    }

    /// Held-out samples of the sigmoid problem (empty for other kinds).
    pub fn test_set(&self) -> &[Sample<T>] {
        match &self.model {
            Model::Sigmoid { test_set } => test_set,
            _ => &[],
        }
    }

    /// Fraction of attack images whose predicted class changes under the
    /// perturbation `x`.
    pub fn attack_success_rate(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        match &self.model {
            Model::Attack { weights, bias, .. } => {
                let mut hits = 0usize;
                let mut total = 0usize;
                for pool in &self.pools {
                    for s in pool {
                        let z = attack::perturbed(&s.features, x);
                        hits += usize::from(attack::predict(weights, bias, &z) != s.label);
                        total += 1;
                    }
                }
                Ok(T::of_usize(hits) / T::of_usize(total))
            }
            _ => Err(ZodiacError::InvalidArgument(format!(
                "attack success rate is only defined for attack_surrogate, not {}",
                self.kind()
            ))),
        }
    }

    /// Empirical `L_f`, `ζ`, `σ₂` from a fixed probe stream.
    fn estimate_meta(&self) -> ProblemMeta<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_d1a6);
        let probes: Vec<Vec<T>> = (0..8).map(|_| gaussian_vec(&mut rng, self.p, 0.5)).collect();

        let mut smoothness = T::zero();
        for pair in probes.windows(2) {
            let ga = self.true_full_gradient(&pair[0]).unwrap_or_default();
            let gb = self.true_full_gradient(&pair[1]).unwrap_or_default();
            let num: T = ga.iter().zip(&gb).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            let den: T = pair[0].iter().zip(&pair[1]).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            if den > T::zero() {
                smoothness = smoothness.max((num / den).sqrt());
            }
        }

        let x0 = &probes[0];
        let mut zeta = T::zero();
        let mut sigma2 = T::zero();
        let full = self.true_full_gradient(x0).unwrap_or_default();
        for agent in 0..self.n_agents() {
            let mean = self.agent_gradient(agent, x0);
            let dev: T = mean.iter().zip(&full).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            sigma2 = sigma2.max(dev.sqrt());
            let mut var = vec![T::zero(); self.p];
            let mut buf = vec![T::zero(); self.p];
            for s in &self.pools[agent] {
                self.sample_gradient(s, agent, x0, &mut buf);
                for ((v, g), m) in var.iter_mut().zip(&buf).zip(&mean) {
                    *v += (*g - *m) * (*g - *m);
                }
            }
            let inv = T::one() / T::of_usize(self.pools[agent].len());
            for v in var {
                zeta = zeta.max((v * inv).sqrt());
            }
        }
        ProblemMeta {
            smoothness,
            zeta,
            sigma2,
        }
    }
}

/// Black-box access to the per-agent stochastic objectives. This is all the
/// optimizer's update path is allowed to see.
pub trait ZerothOrderOracle<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn n_agents(&self) -> usize;

    fn pool_len(&self, agent: usize) -> usize;

    /// `Fᵢ(x, ξ)` for the referenced sample. Indices are trusted.
    fn evaluate(&self, sample: SampleRef, x: &[T]) -> T;
}

/// Diagnostic access used only for metrics.
pub trait Diagnostics<T: Scalar> {
    /// Noiseless `f(x)`.
    fn mean_loss(&self, x: &[T]) -> T;

    /// Exact `∇f(x)`.
    fn full_gradient(&self, x: &[T]) -> Vec<T>;

    /// Held-out accuracy, when the problem defines one.
    fn accuracy(&self, _x: &[T]) -> Option<T> {
        None
    }
}

impl<T: Scalar> ZerothOrderOracle<T> for OracleProblem<T> {
    fn dim(&self) -> usize {
        self.p
    }

    fn n_agents(&self) -> usize {
        self.pools.len()
    }

    fn pool_len(&self, agent: usize) -> usize {
        self.pools[agent].len()
    }

    fn evaluate(&self, sample: SampleRef, x: &[T]) -> T {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.sample_loss(&self.pools[sample.agent_id][sample.sample_index], sample.agent_id, x)
    }
}

impl<T: Scalar> Diagnostics<T> for OracleProblem<T> {
    fn mean_loss(&self, x: &[T]) -> T {
        OracleProblem::mean_loss(self, x)
    }

    fn full_gradient(&self, x: &[T]) -> Vec<T> {
        self.true_full_gradient(x).expect("dimension checked by caller")
    }

    fn accuracy(&self, x: &[T]) -> Option<T> {
        match self.model {
            Model::Sigmoid { .. } => self.test_accuracy(x).ok(),
            _ => None,
        }
    }
}

pub(crate) fn gaussian_vec<T: Scalar>(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> Vec<T> {
    (0..p)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(scale * z)
        })
        .collect()
}

pub fn make_sigmoid_ls<T: Scalar>(config: &SigmoidLsConfig) -> Result<OracleProblem<T>> {
    sigmoid::build(config)
}

pub fn make_synthetic_nonconvex<T: Scalar>(config: &SyntheticConfig) -> Result<OracleProblem<T>> {
    synthetic::build(config)
}

pub fn make_attack_surrogate<T: Scalar>(config: &AttackSurrogateConfig) -> Result<OracleProblem<T>> {
    attack::build(config)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Central finite difference of the noiseless mean objective.
    pub fn fd_gradient(problem: &OracleProblem<f64>, x: &[f64], h: f64) -> Vec<f64> {
        let mut buf = x.to_vec();
        (0..x.len())
            .map(|j| {
                buf[j] = x[j] + h;
                let up = problem.mean_loss(&buf);
                buf[j] = x[j] - h;
                let down = problem.mean_loss(&buf);
                buf[j] = x[j];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1.0);
        num / den
    }
}
