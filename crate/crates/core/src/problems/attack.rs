//! Desk-scale black-box attack loss on a fixed random linear softmax model.
//!
//! For an image `a` with predicted class `y` and a shared perturbation `x`:
//!
//! ```text
//! z(x) = 0.5 · tanh(atanh(2a) + x)
//! F(x, (a, y)) = c · max{ P_y(z) − max_{j≠y} P_j(z), 0 } + ‖z − a‖²
//! ```
//!
//! where `P = softmax(W z + b)`. `W` and `b` never leave this module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gaussian_vec, Model, OracleProblem, Sample};
use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

/// Largest magnitude allowed for a generated pixel, keeping `atanh(2a)` finite.
pub const PIXEL_CLAMP: f64 = 0.4999;

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSurrogateConfig {
    pub n_agents: usize,
    pub dim: usize,
    pub n_classes: usize,
    pub c_penalty: f64,
    pub samples_per_agent: usize,
    pub seed: u64,
}

impl AttackSurrogateConfig {
    pub fn new(n_agents: usize, dim: usize, n_classes: usize, c_penalty: f64, seed: u64) -> Self {
        Self {
            n_agents,
            dim,
            n_classes,
            c_penalty,
            samples_per_agent: 4,
            seed,
        }
    }
}

/// `z(x) = 0.5 tanh(atanh(2a) + x)`, rejecting pixels with `|2a| ≥ 1`.
pub fn attack_transform<T: Scalar>(a: &[T], x: &[T]) -> Result<Vec<T>> {
    if let Some(bad) = a.iter().find(|v| (T::of(2.0) * **v).abs() >= T::one()) {
        return Err(ZodiacError::Domain(format!("pixel {bad} has |2a| >= 1; atanh undefined")));
    }
    if a.len() != x.len() {
        return Err(ZodiacError::DimensionMismatch {
            expected: a.len(),
            got: x.len(),
        });
    }
    Ok(perturbed(a, x))
}

pub(super) fn perturbed<T: Scalar>(a: &[T], x: &[T]) -> Vec<T> {
    let half = T::of(0.5);
    let two = T::of(2.0);
    a.iter().zip(x).map(|(&aj, &xj)| half * ((two * aj).atanh() + xj).tanh()).collect()
}

fn softmax<T: Scalar>(weights: &[Vec<T>], bias: &[T], z: &[T]) -> Vec<T> {
    let logits: Vec<T> = weights
        .iter()
        .zip(bias)
        .map(|(w, b)| w.iter().zip(z).map(|(a, c)| *a * *c).sum::<T>() + *b)
        .collect();
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|l| (*l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(super) fn predict<T: Scalar>(weights: &[Vec<T>], bias: &[T], z: &[T]) -> usize {
    let probs = softmax(weights, bias, z);
    argmax(&probs)
}

fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}

/// Runner-up class `argmax_{j≠y} P_j`.
fn runner_up<T: Scalar>(probs: &[T], y: usize) -> usize {
    let mut best = usize::MAX;
    for (k, p) in probs.iter().enumerate() {
        if k != y && (best == usize::MAX || *p > probs[best]) {
            best = k;
        }
    }
    best
}

pub(super) fn loss<T: Scalar>(weights: &[Vec<T>], bias: &[T], c: T, s: &Sample<T>, x: &[T]) -> T {
    let z = perturbed(&s.features, x);
    let probs = softmax(weights, bias, &z);
    let j = runner_up(&probs, s.label);
    let hinge = (probs[s.label] - probs[j]).max(T::zero());
    let distortion: T = z.iter().zip(&s.features).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
    c * hinge + distortion
}

/// Gradient with the hinge treated as inactive at its kink.
pub(super) fn gradient<T: Scalar>(
    weights: &[Vec<T>],
    bias: &[T],
    c: T,
    s: &Sample<T>,
    x: &[T],
    out: &mut [T],
) {
    let two = T::of(2.0);
    let z = perturbed(&s.features, x);
    for ((o, zj), aj) in out.iter_mut().zip(&z).zip(&s.features) {
        *o = two * (*zj - *aj);
    }
    let probs = softmax(weights, bias, &z);
    let y = s.label;
    let j = runner_up(&probs, y);
    if probs[y] - probs[j] > T::zero() {
        // dP_k/dz = P_k (W_k − Σ_m P_m W_m)
        let p = z.len();
        let mut mean_w = vec![T::zero(); p];
        for (pm, w) in probs.iter().zip(weights) {
            for (m, wv) in mean_w.iter_mut().zip(w) {
                *m += *pm * *wv;
            }
        }
        for d in 0..p {
            let dy = probs[y] * (weights[y][d] - mean_w[d]);
            let dj = probs[j] * (weights[j][d] - mean_w[d]);
            out[d] += c * (dy - dj);
        }
    }
    let half = T::of(0.5);
    let four = T::of(4.0);
    for (o, zj) in out.iter_mut().zip(&z) {
        *o *= half * (T::one() - four * *zj * *zj);
    }
}

pub(super) fn build<T: Scalar>(cfg: &AttackSurrogateConfig) -> Result<OracleProblem<T>> {
    if cfg.n_classes < 2 {
        return Err(ZodiacError::InvalidArgument(format!(
            "attack surrogate needs at least 2 classes, got {}",
            cfg.n_classes
        )));
    }
    if !(cfg.c_penalty > 0.0) {
        return Err(ZodiacError::InvalidArgument(format!(
            "hinge penalty must be positive, got {}",
            cfg.c_penalty
        )));
    }
    if cfg.n_agents == 0 || cfg.dim == 0 || cfg.samples_per_agent == 0 {
        return Err(ZodiacError::InvalidArgument(format!(
            "attack surrogate counts must be positive: {cfg:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w_scale = 4.0 / (cfg.dim as f64).sqrt();
    let weights: Vec<Vec<T>> = (0..cfg.n_classes).map(|_| gaussian_vec(&mut rng, cfg.dim, w_scale)).collect();
    let bias: Vec<T> = gaussian_vec(&mut rng, cfg.n_classes, 0.1);
    let pools = (0..cfg.n_agents)
        .map(|_| {
            (0..cfg.samples_per_agent)
                .map(|_| {
                    let features: Vec<T> = (0..cfg.dim)
                        .map(|_| T::of(rng.random_range(-0.5..0.5_f64).clamp(-PIXEL_CLAMP, PIXEL_CLAMP)))
                        .collect();
                    let label = predict(&weights, &bias, &features);
                    Sample { features, label }
                })
                .collect()
        })
        .collect();
    OracleProblem::assemble(
        cfg.dim,
        pools,
        Model::Attack {
            weights,
            bias,
            c_penalty: T::of(cfg.c_penalty),
        },
        None,
    )
}
