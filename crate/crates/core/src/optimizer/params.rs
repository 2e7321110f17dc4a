//! Step-size bundle and smoothing schedule.
//!
//! With `ρ = ρ(L)`, `ρ₂ = ρ₂(L)` and horizon `T > n³/p`:
//!
//! ```text
//! κ₁ > 1/ρ₂ + 1
//! κ₂ ∈ (0, min{ ((κ₁−1)ρ₂ − 1) / (ρ + (2κ₁² + 1)ρ² + 1), 1/5 })
//! β = κ₂ √(pT) / √n,   α = κ₁ β,   η = κ₂ / β
//! δ_k = κ_δ / (p^{1/4} n^{1/4} (k+1)^{1/4})
//! ```

use crate::error::{Result, ZodiacError};
use crate::powerball::PowerballGamma;
use crate::scalar::Scalar;
use crate::topology::Topology;

/// How far inside the admissible window the derived constants sit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamMargins {
    /// `κ₁ = kappa1_margin · (1/ρ₂ + 1)`; must exceed 1.
    pub kappa1_margin: f64,
    /// `κ₂ = kappa2_frac · (upper end of the window)`; in `(0, 1)`.
    pub kappa2_frac: f64,
    pub kappa_delta: f64,
    /// Reject `T ≤ n³/p`. Disabling it keeps every other formula intact and
    /// is meant for sweeps that deliberately run below the horizon bound.
    pub enforce_horizon: bool,
}

impl Default for ParamMargins {
    fn default() -> Self {
        Self {
            kappa1_margin: 1.1,
            kappa2_frac: 0.9,
            kappa_delta: 1.0,
            enforce_horizon: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoParams<T> {
    alpha: T,
    beta: T,
    eta: T,
    gamma: PowerballGamma<T>,
    kappa1: T,
    kappa2: T,
    kappa_delta: T,
    horizon: usize,
    n: usize,
    p: usize,
}

impl<T: Scalar> AlgoParams<T> {
    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn gamma(&self) -> PowerballGamma<T> {
        self.gamma
    }

    pub fn kappa1(&self) -> T {
        self.kappa1
    }

    pub fn kappa2(&self) -> T {
        self.kappa2
    }

    pub fn kappa_delta(&self) -> T {
        self.kappa_delta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Same constants with a different powerball exponent.
    pub fn with_gamma(mut self, gamma: PowerballGamma<T>) -> Self {
        self.gamma = gamma;
        self
    }

    /// Smoothing radius at round `k`, taken at the upper bound of the schedule.
    pub fn delta_at(&self, k: usize) -> T {
        let root = |v: usize| T::of_usize(v).powf(T::of(0.25));
        self.kappa_delta / (root(self.p) * root(self.n) * root(k + 1))
    }
}

/// Smallest horizon satisfying `T > n³/p`.
pub fn min_horizon(n: usize, p: usize) -> usize {
    let n3 = (n as u128).pow(3);
    (n3 / p as u128 + 1) as usize
}

/// Upper end of the `κ₂` window for a given `κ₁`.
pub fn kappa2_upper(kappa1: f64, rho: f64, rho2: f64) -> f64 {
    let num = (kappa1 - 1.0) * rho2 - 1.0;
    let den = rho + (2.0 * kappa1 * kappa1 + 1.0) * rho * rho + 1.0;
    (num / den).min(0.2)
}

pub fn derive_params<T: Scalar>(
    topology: &Topology,
    p: usize,
    horizon: usize,
    gamma: PowerballGamma<T>,
    margins: &ParamMargins,
) -> Result<AlgoParams<T>> {
    let n = topology.n();
    if p == 0 {
        return Err(ZodiacError::InvalidArgument("dimension must be positive".into()));
    }
    let min_t = min_horizon(n, p);
    if margins.enforce_horizon && horizon < min_t {
        return Err(ZodiacError::HorizonTooShort { t: horizon, min_t });
    }
    if horizon == 0 {
        return Err(ZodiacError::InvalidArgument("horizon must be positive".into()));
    }
    if !(margins.kappa1_margin > 1.0) {
        return Err(ZodiacError::ParameterWindow(format!(
            "kappa1_margin must exceed 1, got {}",
            margins.kappa1_margin
        )));
    }
    if !(margins.kappa2_frac > 0.0 && margins.kappa2_frac < 1.0) {
        return Err(ZodiacError::ParameterWindow(format!(
            "kappa2_frac must lie in (0, 1), got {}",
            margins.kappa2_frac
        )));
    }
    if !(margins.kappa_delta > 0.0) {
        return Err(ZodiacError::ParameterWindow(format!(
            "kappa_delta must be positive, got {}",
            margins.kappa_delta
        )));
    }

    let (rho, rho2) = (topology.rho(), topology.rho2());
    let kappa1 = margins.kappa1_margin * (1.0 / rho2 + 1.0);
    let upper = kappa2_upper(kappa1, rho, rho2);
    if !(upper > 0.0) {
        return Err(ZodiacError::ParameterWindow(format!(
            "empty kappa2 window for kappa1 = {kappa1}, rho = {rho}, rho2 = {rho2}"
        )));
    }
    let kappa2 = margins.kappa2_frac * upper;
    let beta = kappa2 * ((p * horizon) as f64).sqrt() / (n as f64).sqrt();
    let alpha = kappa1 * beta;
    let eta = kappa2 / beta;

    Ok(AlgoParams {
        alpha: T::of(alpha),
        beta: T::of(beta),
        eta: T::of(eta),
        gamma,
        kappa1: T::of(kappa1),
        kappa2: T::of(kappa2),
        kappa_delta: T::of(margins.kappa_delta),
        horizon,
        n,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{fixture_graph, FixtureKind};

    fn g(x: f64) -> PowerballGamma<f64> {
        PowerballGamma::new(x).unwrap()
    }

    #[test]
    fn path2_window_by_hand() {
        let t = fixture_graph(FixtureKind::Path, 2).unwrap();
        let prm: AlgoParams<f64> = derive_params(&t, 100, 1000, g(0.6), &ParamMargins::default()).unwrap();
        assert!((prm.kappa1() - 1.65).abs() < 1e-14);
        // (0.65·2 − 1) / (2 + (2·1.65² + 1)·4 + 1) = 0.3 / 28.78
        let expected = 0.9 * 0.3 / 28.78;
        assert!((prm.kappa2() - expected).abs() < 1e-14);
        assert!((prm.kappa2() - 0.009378).abs() < 1e-5);
        let beta = prm.kappa2() * (100.0_f64 * 1000.0).sqrt() / 2f64.sqrt();
        assert!((prm.beta() - beta).abs() < 1e-12);
        assert!((prm.beta() / prm.kappa2() - 223.606_797_749_979).abs() < 1e-9);
        assert!((prm.eta() * prm.beta() - prm.kappa2()).abs() <= 1e-15 * prm.kappa2());
        assert_eq!(prm.alpha(), prm.kappa1() * prm.beta());
    }

    #[test]
    fn horizon_boundary() {
        let t = fixture_graph(FixtureKind::Complete, 10).unwrap();
        let err = derive_params::<f64>(&t, 1, 999, g(1.0), &ParamMargins::default()).unwrap_err();
        assert_eq!(err, ZodiacError::HorizonTooShort { t: 999, min_t: 1001 });
        let err = derive_params::<f64>(&t, 1, 1000, g(1.0), &ParamMargins::default()).unwrap_err();
        assert!(matches!(err, ZodiacError::HorizonTooShort { .. }));
        assert!(derive_params::<f64>(&t, 1, 1001, g(1.0), &ParamMargins::default()).is_ok());
        let relaxed = ParamMargins {
            enforce_horizon: false,
            ..Default::default()
        };
        assert!(derive_params::<f64>(&t, 1, 10, g(1.0), &relaxed).is_ok());
        assert!(matches!(
            derive_params::<f64>(&t, 1, 0, g(1.0), &relaxed),
            Err(ZodiacError::InvalidArgument(_))
        ));
        let k3 = fixture_graph(FixtureKind::Complete, 3).unwrap();
        assert_eq!(
            derive_params::<f64>(&k3, 64, 0, g(1.0), &ParamMargins::default()).unwrap_err(),
            ZodiacError::HorizonTooShort { t: 0, min_t: 1 }
        );
    }

    #[test]
    fn margins_validated() {
        let t = fixture_graph(FixtureKind::Path, 2).unwrap();
        for m in [
            ParamMargins {
                kappa1_margin: 1.0,
                ..Default::default()
            },
            ParamMargins {
                kappa2_frac: 1.0,
                ..Default::default()
            },
            ParamMargins {
                kappa_delta: 0.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                derive_params::<f64>(&t, 4, 100, g(1.0), &m),
                Err(ZodiacError::ParameterWindow(_))
            ));
        }
    }

    #[test]
    fn delta_schedule() {
        let t = fixture_graph(FixtureKind::Complete, 16).unwrap();
        let relaxed = ParamMargins {
            enforce_horizon: false,
            ..Default::default()
        };
        let prm: AlgoParams<f64> = derive_params(&t, 16, 100, g(1.0), &relaxed).unwrap();
        assert!((prm.delta_at(15) - 0.125).abs() < 1e-15);
        for k in 0..100 {
            assert!(prm.delta_at(k + 1) < prm.delta_at(k));
        }
        let t1 = fixture_graph(FixtureKind::Path, 2).unwrap();
        let one: AlgoParams<f64> = derive_params(&t1, 1, 9, g(1.0), &ParamMargins::default()).unwrap();
        // n = 2 here, so δ₀ = 1 / 2^{1/4}.
        assert!((one.delta_at(0) - 2f64.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn min_horizon_values() {
        assert_eq!(min_horizon(10, 1), 1001);
        assert_eq!(min_horizon(8, 16), 33);
        assert_eq!(min_horizon(20, 20), 401);
    }
}
