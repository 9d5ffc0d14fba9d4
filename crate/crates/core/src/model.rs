//! Regression instances, coefficient vectors, solver settings and the penalized
//! objective
//!
//! ```text
//! L_tau(y - X b) + lambda1 ||b||_1 + lambda2 ||D b||_1
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::difference::apply_d_into;
use crate::error::{check_len, Error, Result};
use crate::float::{all_finite, norm1};
use crate::huber::{huber_loss, squared_loss};
use crate::matrix::Matrix;

/// Design matrix `X` (n x p) and response `y` (length n).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    x: Matrix,
    y: Vec<f64>,
}

impl ProblemData {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument("problem needs at least one sample"));
        }
        if x.ncols() < 2 {
            return Err(Error::InvalidArgument("problem needs at least two features"));
        }
        check_len("response length", x.nrows(), y.len())?;
        if !all_finite(x.as_slice()) {
            return Err(Error::NonFinite("design matrix"));
        }
        if !all_finite(&y) {
            return Err(Error::NonFinite("response"));
        }
        Ok(Self { x, y })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn into_parts(self) -> (Matrix, Vec<f64>) {
        (self.x, self.y)
    }

    pub fn predict(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.x.mul_vec(beta)
    }

    /// `y - X beta`.
    pub fn residuals(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.predict(beta)?;
        for (ri, yi) in r.iter_mut().zip(&self.y) {
            *ri = yi - *ri;
        }
        Ok(r)
    }

    /// Same problem with the feature columns reordered.
    pub fn with_column_order(&self, order: &[usize]) -> Result<Self> {
        check_len("column permutation", self.p(), order.len())?;
        Self::new(self.x.select_columns(order)?, self.y.clone())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let y = rows.iter().map(|&i| self.y.get(i).copied()).collect::<Option<Vec<_>>>()
            .ok_or(Error::InvalidArgument("row index out of range"))?;
        Self::new(self.x.select_rows(rows)?, y)
    }
}

/// Regression coefficients; all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if !all_finite(&beta) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self(beta))
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Coefficients {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Coefficients {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Huber,
    /// `(1/2n) ||y - X b||^2`; the least-squares fused-lasso baseline.
    Squared,
}

/// Upper end of the admissible dual step-length interval, `(1 + sqrt 5) / 2`.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Huber's classical robustification constant.
pub const CLASSICAL_TAU: f64 = 1.345;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Augmented-Lagrangian penalty.
    pub sigma: f64,
    /// Dual step length, in `(0, (1 + sqrt 5) / 2)`.
    pub step_length: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub loss: LossKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: CLASSICAL_TAU,
            lambda1: 0.1,
            lambda2: 0.1,
            sigma: 0.1,
            step_length: 1.0,
            tol: 1e-3,
            max_iter: 2000,
            loss: LossKind::Huber,
        }
    }
}

impl SolverConfig {
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_lambdas(mut self, lambda1: f64, lambda2: f64) -> Self {
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self
    }

    pub fn with_tol(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn with_loss(mut self, loss: LossKind) -> Self {
        self.loss = loss;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.loss == LossKind::Huber && (self.tau.is_nan() || self.tau <= 0.0) {
            return Err(Error::InvalidArgument("tau must be positive"));
        }
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return Err(Error::InvalidArgument("lambda1 must be finite and nonnegative"));
        }
        if !(self.lambda2.is_finite() && self.lambda2 >= 0.0) {
            return Err(Error::InvalidArgument("lambda2 must be finite and nonnegative"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidArgument("sigma must be finite and positive"));
        }
        if !(self.step_length > 0.0 && self.step_length < GOLDEN_RATIO) {
            return Err(Error::InvalidArgument("step length must lie in (0, (1 + sqrt 5) / 2)"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive"));
        }
        Ok(())
    }

    /// Loss term only, evaluated on residuals.
    pub fn loss_value(&self, residuals: &[f64]) -> Result<f64> {
        match self.loss {
            LossKind::Huber => huber_loss(residuals, self.tau),
            LossKind::Squared => squared_loss(residuals),
        }
    }
}

/// `lambda1 ||beta||_1 + lambda2 ||D beta||_1`.
pub fn fused_penalty(beta: &[f64], lambda1: f64, lambda2: f64) -> Result<f64> {
    if beta.len() < 2 {
        return Err(Error::InvalidArgument("difference operator needs p >= 2"));
    }
    let mut d = vec![0.0; beta.len() - 1];
    apply_d_into(beta, &mut d);
    Ok(lambda1 * norm1(beta) + lambda2 * norm1(&d))
}

pub fn objective(data: &ProblemData, beta: &[f64], cfg: &SolverConfig) -> Result<f64> {
    check_len("coefficients", data.p(), beta.len())?;
    let r = data.residuals(beta)?;
    Ok(cfg.loss_value(&r)? + fused_penalty(beta, cfg.lambda1, cfg.lambda2)?)
}
