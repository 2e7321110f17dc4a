//! Coordinate-subset zeroth-order gradient estimators.
//!
//! Given a black-box `F(·, ξ)` with the sample `ξ` held fixed, a random subset
//! `S` of `n_c` coordinates is probed with finite differences and the result
//! is rescaled by `p / n_c`:
//!
//! * forward: `(p/n_c) Σ_{j∈S} (F(x + δeⱼ) − F(x)) / δ · eⱼ`, `n_c + 1` calls;
//! * central: `(p/n_c) Σ_{j∈S} (F(x + δeⱼ) − F(x − δeⱼ)) / (2δ) · eⱼ`, `2 n_c` calls.
//!
//! Averaged over all `C(p, n_c)` subsets, both match the corresponding
//! full-coordinate estimator exactly.

use rand::Rng;

use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Forward,
    Central,
}

impl std::str::FromStr for EstimatorMode {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Self::Forward),
            "central" => Ok(Self::Central),
            other => Err(ZodiacError::InvalidArgument(format!(
                "estimator mode must be 'forward' or 'central', got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Forward => "forward",
            Self::Central => "central",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    n_c: usize,
    mode: EstimatorMode,
    p: usize,
}

impl EstimatorConfig {
    pub fn new(p: usize, n_c: usize, mode: EstimatorMode) -> Result<Self> {
        if n_c == 0 || n_c > p {
            return Err(ZodiacError::InvalidArgument(format!(
                "coordinate subset size must satisfy 1 <= n_c <= p = {p}, got {n_c}"
            )));
        }
        Ok(Self { n_c, mode, p })
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Oracle calls spent by one call to [`estimate`].
    pub fn calls_per_estimate(&self) -> usize {
        match self.mode {
            EstimatorMode::Forward => self.n_c + 1,
            EstimatorMode::Central => 2 * self.n_c,
        }
    }
}

/// Uniformly random `n_c`-subset of `0..p`, sorted ascending.
pub fn sample_coordinates<R: Rng + ?Sized>(p: usize, n_c: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n_c == 0 || n_c > p {
        return Err(ZodiacError::InvalidArgument(format!(
            "cannot sample {n_c} coordinates out of {p}"
        )));
    }
    if n_c == p {
        return Ok((0..p).collect());
    }
    let mut s = rand::seq::index::sample(rng, p, n_c).into_vec();
    s.sort_unstable();
    Ok(s)
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if delta > T::zero() && delta.is_finite() {
        Ok(())
    } else {
        Err(ZodiacError::InvalidArgument(format!(
            "smoothing radius must be positive and finite, got {delta}"
        )))
    }
}

fn finite<T: Scalar>(v: T, what: &str) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ZodiacError::NonFinite(format!("oracle returned {v} at {what}")))
    }
}

/// Evaluates `F` at `x` with coordinate `j` shifted by `h`, restoring the probe.
fn probe<T: Scalar, F: FnMut(&[T]) -> T>(eval: &mut F, buf: &mut [T], x: &[T], j: usize, h: T) -> T {
    buf[j] = x[j] + h;
    let v = eval(buf);
    buf[j] = x[j];
    v
}

/// Coordinate-subset estimate at `x` using coordinates `subset`.
///
/// Returns the estimate (zero outside `subset`) and the number of oracle
/// calls spent.
pub fn estimate<T, F>(
    config: &EstimatorConfig,
    mut eval: F,
    x: &[T],
    delta: T,
    subset: &[usize],
) -> Result<(Vec<T>, usize)>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    check_delta(delta)?;
    if x.len() != config.p {
        return Err(ZodiacError::DimensionMismatch {
            expected: config.p,
            got: x.len(),
        });
    }
    if subset.len() != config.n_c {
        return Err(ZodiacError::InvalidArgument(format!(
            "subset has {} coordinates, configured n_c = {}",
            subset.len(),
            config.n_c
        )));
    }
    if subset.iter().any(|&j| j >= config.p) || subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ZodiacError::InvalidArgument(
            "subset must be strictly increasing indices below p".into(),
        ));
    }

    let scale = T::of_usize(config.p) / T::of_usize(config.n_c);
    let mut g = vec![T::zero(); config.p];
    let mut buf = x.to_vec();
    let calls = match config.mode {
        EstimatorMode::Forward => {
            let base = finite(eval(x), "base point")?;
            for &j in subset {
                let up = finite(probe(&mut eval, &mut buf, x, j, delta), "forward probe")?;
                g[j] = scale * ((up - base) / delta);
            }
            config.n_c + 1
        }
        EstimatorMode::Central => {
            let two_delta = delta + delta;
            for &j in subset {
                let up = finite(probe(&mut eval, &mut buf, x, j, delta), "forward probe")?;
                let down = finite(probe(&mut eval, &mut buf, x, j, -delta), "backward probe")?;
                g[j] = scale * ((up - down) / two_delta);
            }
            2 * config.n_c
        }
    };
    Ok((g, calls))
}

/// Central differences along every coordinate, without rescaling.
pub fn full_coordinate_estimate<T, F>(mut eval: F, x: &[T], delta: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    check_delta(delta)?;
    let two_delta = delta + delta;
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|j| {
            let up = finite(probe(&mut eval, &mut buf, x, j, delta), "forward probe")?;
            let down = finite(probe(&mut eval, &mut buf, x, j, -delta), "backward probe")?;
            Ok((up - down) / two_delta)
        })
        .collect()
}

/// Forward differences along every coordinate, without rescaling.
pub fn full_coordinate_forward_estimate<T, F>(mut eval: F, x: &[T], delta: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    check_delta(delta)?;
    let base = finite(eval(x), "base point")?;
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|j| {
            let up = finite(probe(&mut eval, &mut buf, x, j, delta), "forward probe")?;
            Ok((up - base) / delta)
        })
        .collect()
}

/// Upper bound on `E‖gᵉ‖²` for the central estimator at a point where the
/// noiseless gradient has squared norm `grad_norm_sq`:
///
/// ```text
/// 2(p−1)‖∇f‖² + 2pσ₁² + (3p²/n_c)(ζ² + L²δ²/2) + p²L²δ²/2,   σ₁² = pζ²
/// ```
pub fn second_moment_bound(p: usize, n_c: usize, grad_norm_sq: f64, zeta: f64, smoothness: f64, delta: f64) -> f64 {
    let (p, n_c) = (p as f64, n_c as f64);
    let sigma1_sq = p * zeta * zeta;
    let smooth = smoothness * smoothness * delta * delta / 2.0;
    2.0 * (p - 1.0) * grad_norm_sq + 2.0 * p * sigma1_sq + 3.0 * p * p / n_c * (zeta * zeta + smooth) + p * p * smooth
}
