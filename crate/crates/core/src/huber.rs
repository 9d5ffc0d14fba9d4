//! The Huber function, its derivative, and the averaged Huber loss.

use crate::error::{Error, Result};

fn check(x: f64, tau: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite("huber argument"));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidArgument("tau must be positive"));
    }
    Ok(())
}

/// `x^2 / 2` for `|x| <= tau`, `tau |x| - tau^2 / 2` beyond. `tau = +inf`
/// gives the plain quadratic.
#[inline]
pub(crate) fn huber_value(x: f64, tau: f64) -> f64 {
    let a = x.abs();
    if a <= tau {
        0.5 * x * x
    } else {
        tau * a - 0.5 * tau * tau
    }
}

/// Derivative of [`huber_value`]: `x` clipped to `[-tau, tau]`.
#[inline]
pub(crate) fn huber_psi(x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        x
    } else {
        tau.copysign(x)
    }
}

pub fn huber_scalar(x: f64, tau: f64) -> Result<f64> {
    check(x, tau)?;
    Ok(huber_value(x, tau))
}

pub fn huber_deriv(x: f64, tau: f64) -> Result<f64> {
    check(x, tau)?;
    Ok(huber_psi(x, tau))
}

/// Mean of the componentwise Huber function.
pub fn huber_loss(residuals: &[f64], tau: f64) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::InvalidArgument("huber loss of an empty vector"));
    }
    let mut acc = 0.0;
    for &r in residuals {
        check(r, tau)?;
        acc += huber_value(r, tau);
    }
    Ok(acc / residuals.len() as f64)
}

/// `(1/2n) ||r||^2`, the loss the least-squares baseline substitutes.
pub fn squared_loss(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::InvalidArgument("squared loss of an empty vector"));
    }
    if !crate::float::all_finite(residuals) {
        return Err(Error::NonFinite("residuals"));
    }
    Ok(0.5 * crate::float::norm2_sq(residuals) / residuals.len() as f64)
}
