//! Power-law fits in log-log space.

use crate::error::{Result, ZodiacError};

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln T, ln metric)`.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares of `ln metric` on `ln T`.
pub fn rate_fit(runs: &[(f64, f64)]) -> Result<RateFit> {
    if runs.len() < 3 {
        return Err(ZodiacError::InvalidArgument(format!(
            "rate fit needs at least 3 horizons, got {}",
            runs.len()
        )));
    }
    if let Some((t, m)) = runs.iter().find(|(t, m)| !(*t > 0.0) || !(*m > 0.0) || !t.is_finite() || !m.is_finite()) {
        return Err(ZodiacError::Domain(format!(
            "rate fit needs positive finite values, got ({t}, {m})"
        )));
    }
    let points: Vec<(f64, f64)> = runs.iter().map(|(t, m)| (t.ln(), m.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ZodiacError::InvalidArgument("rate fit needs distinct horizons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let half: Vec<(f64, f64)> = [2000.0, 8000.0, 32000.0].iter().map(|t: &f64| (*t, 3.0 / t.sqrt())).collect();
        let f = rate_fit(&half).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let inv: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 5000.0].iter().map(|t: &f64| (*t, 7.0 / t)).collect();
        assert!((rate_fit(&inv).unwrap().slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(matches!(
            rate_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            Err(ZodiacError::Domain(_))
        ));
        assert!(rate_fit(&[(2.0, 1.0), (2.0, 3.0), (2.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_any_exponent(a in -3.0f64..3.0, c in 0.01f64..100.0, t0 in 1.0f64..100.0) {
            let pts: Vec<(f64, f64)> = (0..5).map(|i| {
                let t = t0 * 2f64.powi(i);
                (t, c * t.powf(a))
            }).collect();
            let f = rate_fit(&pts).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-12);
            prop_assert!(f.r_squared >= 0.0 && f.r_squared <= 1.0);
        }
    }
}
