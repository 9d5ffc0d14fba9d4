//! Estimation and prediction error measures.

use crate::error::{check_len, Error, Result};
use crate::float::sqrt;
use crate::model::ProblemData;

/// `||beta_hat - beta_star||_2`.
///
/// Reported under the name "MSE" in benchmark tables, but it is the plain
/// Euclidean norm of the coefficient error: not squared, not divided by `p`.
pub fn estimation_error(beta_hat: &[f64], beta_star: &[f64]) -> Result<f64> {
    check_len("coefficient vectors", beta_star.len(), beta_hat.len())?;
    let sq: f64 = beta_hat.iter().zip(beta_star).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sqrt(sq))
}

/// Mean absolute prediction error `(1/n) sum |y_i - x_i^T beta|`.
pub fn mae(test: &ProblemData, beta_hat: &[f64]) -> Result<f64> {
    let r = test.residuals(beta_hat)?;
    Ok(r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64)
}

/// Sample standard deviation (divisor `n - 1`) of `y - X beta`.
pub fn residual_std(data: &ProblemData, beta_hat: &[f64]) -> Result<f64> {
    if data.n() < 2 {
        return Err(Error::InvalidArgument("residual spread needs n >= 2"));
    }
    sample_std(&data.residuals(beta_hat)?)
}

pub fn sample_std(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::InvalidArgument("sample standard deviation needs two values"));
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(sqrt(ss / (v.len() - 1) as f64))
}

/// Non-excess sample kurtosis `m4 / m2^2` (about 3 for normal data).
pub fn kurtosis(v: &[f64]) -> Result<f64> {
    if v.len() < 4 {
        return Err(Error::InvalidArgument("kurtosis needs at least four values"));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in v {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if !(m2 > 1e-300 * (1.0 + mean * mean)) || !m4.is_finite() {
        return Err(Error::InvalidArgument("kurtosis of a sample with zero variance"));
    }
    Ok(m4 / (m2 * m2))
}
