//! Elementwise powerball transform `σ(x, γ) = sgn(x)·|x|^γ`.

use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

/// Powerball exponent, validated to lie in `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerballGamma<T>(T);

impl<T: Scalar> PowerballGamma<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if gamma >= T::of(0.5) && gamma <= T::one() {
            Ok(Self(gamma))
        } else {
            Err(ZodiacError::InvalidArgument(format!(
                "powerball gamma must lie in [0.5, 1], got {gamma}"
            )))
        }
    }

    /// `γ = 1`, under which the transform is the identity.
    pub fn identity() -> Self {
        Self(T::one())
    }

    pub fn get(self) -> T {
        self.0
    }

    pub fn is_identity(self) -> bool {
        self.0 == T::one()
    }
}

#[inline]
fn signed_pow<T: Scalar>(x: T, gamma: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.signum() * x.abs().powf(gamma)
    }
}

/// Applies `σ(·, γ)` in place. `γ = 1` leaves the buffer untouched.
pub fn powerball_in_place<T: Scalar>(v: &mut [T], gamma: PowerballGamma<T>) -> Result<()> {
    if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
        return Err(ZodiacError::NonFinite(format!(
            "powerball input coordinate {bad} is {}",
            v[bad]
        )));
    }
    if gamma.is_identity() {
        return Ok(());
    }
    let g = gamma.get();
    for x in v.iter_mut() {
        *x = signed_pow(*x, g);
    }
    Ok(())
}

pub fn powerball<T: Scalar>(v: &[T], gamma: PowerballGamma<T>) -> Result<Vec<T>> {
    let mut out = v.to_vec();
    powerball_in_place(&mut out, gamma)?;
    Ok(out)
}

/// `(Σⱼ |vⱼ|^{1+γ})^{2/(1+γ)}`, the squared `(1+γ)`-norm.
pub fn norm_1_plus_gamma_sq<T: Scalar>(v: &[T], gamma: PowerballGamma<T>) -> T {
    let q = T::one() + gamma.get();
    if gamma.is_identity() {
        return v.iter().map(|&x| x * x).sum();
    }
    let s: T = v.iter().map(|x| x.abs().powf(q)).sum();
    s.powf(T::of(2.0) / q)
}
