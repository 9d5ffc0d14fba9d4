//! Multi-block ADMM for the fused-lasso penalized Huber problem.
//!
//! The problem is split as
//!
//! ```text
//! min  L_tau(y - z) + lambda1 ||alpha||_1 + lambda2 ||gamma||_1
//! s.t. (z, alpha, gamma) = (X, I, D) beta
//! ```
//!
//! and each iteration updates `beta` (one linear solve with the cached factor of
//! `M = X^T X + I + D^T D`), then `alpha` and `gamma` (soft-thresholding), then
//! `z` (Huber prox), and finally the multipliers with step `pi * sigma`.
//!
//! The multiplier sign convention is the one produced by the update
//! `mu += pi sigma (theta - X~ beta)`; at a solution `mu_z = grad L_tau(y - z)`,
//! `-mu_alpha / lambda1` is a subgradient of `||alpha||_1` and `X~^T mu = 0`.
//! The residuals below vanish exactly at such points.

use alloc::vec;
use alloc::vec::Vec;

use crate::difference::{add_dtd, apply_d_into};
use crate::error::{check_len, Error, Result};
use crate::float::{all_finite, norm2, sqrt};
use crate::linalg::Cholesky;
use crate::matrix::Matrix;
use crate::model::{Coefficients, LossKind, ProblemData, SolverConfig};
use crate::prox::{huber_prox_unchecked, soft_threshold_scalar, squared_prox_unchecked};

/// Cached Cholesky factor of `M = X^T X + I + D^T D`.
///
/// `M` depends on the design only, so one factorization serves every
/// `(tau, lambda1, lambda2, sigma)` on the same data.
#[derive(Debug, Clone)]
pub struct NormalFactorization {
    chol: Cholesky,
    n: usize,
}

impl NormalFactorization {
    pub fn new(data: &ProblemData) -> Result<Self> {
        let m = Self::normal_matrix(data)?;
        let chol = Cholesky::factor(&m)?;
        Ok(Self { chol, n: data.n() })
    }

    /// Assembles `X^T X + I + D^T D`; `lambda_min >= 1` for any `X`.
    pub fn normal_matrix(data: &ProblemData) -> Result<Matrix> {
        let ones = vec![1.0; data.n()];
        let mut m = data.x().weighted_gram(&ones)?;
        for j in 0..data.p() {
            m.set(j, j, m.get(j, j) + 1.0);
        }
        add_dtd(&mut m)?;
        if !all_finite(m.as_slice()) {
            return Err(Error::NonFinite("normal matrix"));
        }
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.chol.dim()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.chol.solve(rhs)
    }

    pub fn reconstruct(&self) -> Matrix {
        self.chol.reconstruct()
    }

    fn check(&self, data: &ProblemData) -> Result<()> {
        check_len("factorization dimension", data.p(), self.p())?;
        check_len("factorization sample count", data.n(), self.n)
    }
}

/// Primal blocks `(z, alpha, beta, gamma)` and multipliers `(mu_z, mu_alpha, mu_gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub z: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mu_z: Vec<f64>,
    pub mu_alpha: Vec<f64>,
    pub mu_gamma: Vec<f64>,
}

impl IterateState {
    pub fn zeros(n: usize, p: usize) -> Self {
        let g = p.saturating_sub(1);
        Self {
            z: vec![0.0; n],
            alpha: vec![0.0; p],
            gamma: vec![0.0; g],
            beta: vec![0.0; p],
            mu_z: vec![0.0; n],
            mu_alpha: vec![0.0; p],
            mu_gamma: vec![0.0; g],
        }
    }

    /// The primal-feasible state `z = X beta, alpha = beta, gamma = D beta` with zero multipliers.
    pub fn feasible(data: &ProblemData, beta: &[f64]) -> Result<Self> {
        check_len("coefficients", data.p(), beta.len())?;
        let mut s = Self::zeros(data.n(), data.p());
        s.beta.copy_from_slice(beta);
        s.alpha.copy_from_slice(beta);
        data.x().mul_vec_into(beta, &mut s.z);
        apply_d_into(beta, &mut s.gamma);
        Ok(s)
    }

    pub fn check_dims(&self, n: usize, p: usize) -> Result<()> {
        if p < 2 {
            return Err(Error::InvalidArgument("difference operator needs p >= 2"));
        }
        check_len("z", n, self.z.len())?;
        check_len("mu_z", n, self.mu_z.len())?;
        check_len("alpha", p, self.alpha.len())?;
        check_len("beta", p, self.beta.len())?;
        check_len("mu_alpha", p, self.mu_alpha.len())?;
        check_len("gamma", p - 1, self.gamma.len())?;
        check_len("mu_gamma", p - 1, self.mu_gamma.len())
    }

    fn is_finite(&self) -> bool {
        [&self.z, &self.alpha, &self.gamma, &self.beta, &self.mu_z, &self.mu_alpha, &self.mu_gamma]
            .iter()
            .all(|v| all_finite(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub z: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// The five KKT residuals and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub phi_mu: f64,
    pub phi_z: f64,
    pub phi_alpha: f64,
    pub phi_beta: f64,
    pub phi_gamma: f64,
    pub res: f64,
}

impl KktResiduals {
    fn from_parts(phi_mu: f64, phi_z: f64, phi_alpha: f64, phi_beta: f64, phi_gamma: f64) -> Self {
        let res = phi_mu.max(phi_z).max(phi_alpha).max(phi_beta).max(phi_gamma);
        Self { phi_mu, phi_z, phi_alpha, phi_beta, phi_gamma, res }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterReached,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub beta: Coefficients,
    pub iterations: usize,
    pub residual_history: Vec<KktResiduals>,
    pub status: SolveStatus,
    /// Final iterate, usable as a warm start.
    pub state: IterateState,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_residuals(&self) -> Option<&KktResiduals> {
        self.residual_history.last()
    }
}

// ---------------------------------------------------------------------------
// Kernels shared by the public single-step operations and the solve loop.

/// `out = X^T (z + mu_z / sigma) + (alpha + mu_alpha / sigma) + D^T (gamma + mu_gamma / sigma)`.
fn beta_rhs_into(state: &IterateState, data: &ProblemData, sigma: f64, out: &mut [f64], scratch_n: &mut [f64]) {
    for ((s, z), m) in scratch_n.iter_mut().zip(&state.z).zip(&state.mu_z) {
        *s = z + m / sigma;
    }
    data.x().tmul_vec_into(scratch_n, out);
    for ((o, a), m) in out.iter_mut().zip(&state.alpha).zip(&state.mu_alpha) {
        *o += a + m / sigma;
    }
    // D^T v with v = gamma + mu_gamma / sigma, (D^T v)_j = v_{j-1} - v_j
    let p = out.len();
    let v = |k: usize| state.gamma[k] + state.mu_gamma[k] / sigma;
    out[0] -= v(0);
    for j in 1..p - 1 {
        out[j] += v(j - 1) - v(j);
    }
    out[p - 1] += v(p - 2);
}

fn alpha_into(beta: &[f64], mu_alpha: &[f64], cfg: &SolverConfig, out: &mut [f64]) {
    let c = cfg.lambda1 / cfg.sigma;
    for ((o, b), m) in out.iter_mut().zip(beta).zip(mu_alpha) {
        *o = soft_threshold_scalar(b - m / cfg.sigma, c);
    }
}

fn gamma_into(d_beta: &[f64], mu_gamma: &[f64], cfg: &SolverConfig, out: &mut [f64]) {
    let c = cfg.lambda2 / cfg.sigma;
    for ((o, d), m) in out.iter_mut().zip(d_beta).zip(mu_gamma) {
        *o = soft_threshold_scalar(d - m / cfg.sigma, c);
    }
}

/// `z_i = y_i - w_i` where `w_i` minimizes `(1/n) h_tau(w) + (sigma/2) (w - zeta_i)^2`
/// and `zeta_i = y_i - x_i beta + mu_z,i / sigma`.
fn z_into(y: &[f64], x_beta: &[f64], mu_z: &[f64], cfg: &SolverConfig, out: &mut [f64]) {
    let n = y.len() as f64;
    let c = 1.0 / cfg.sigma;
    for (((o, yi), xb), m) in out.iter_mut().zip(y).zip(x_beta).zip(mu_z) {
        let zeta = yi - xb + m / cfg.sigma;
        let w = match cfg.loss {
            LossKind::Huber => huber_prox_unchecked(zeta, cfg.tau, c, n),
            LossKind::Squared => squared_prox_unchecked(zeta, c, n),
        };
        *o = yi - w;
    }
}

fn mu_step(mu: &mut [f64], primal: &[f64], image: &[f64], step: f64) {
    for ((m, a), b) in mu.iter_mut().zip(primal).zip(image) {
        *m += step * (a - b);
    }
}

/// `||a - P_{||.||_1}(a - m / lambda)|| / (1 + ||a|| + ||m / lambda||)`, or
/// `||m||` when `lambda = 0`.
fn l1_residual(a: &[f64], m: &[f64], lambda: f64) -> f64 {
    if lambda == 0.0 {
        return norm2(m);
    }
    let (mut num, mut na, mut nm) = (0.0, 0.0, 0.0);
    for (ai, mi) in a.iter().zip(m) {
        let s = mi / lambda;
        let d = ai - soft_threshold_scalar(ai - s, 1.0);
        num += d * d;
        na += ai * ai;
        nm += s * s;
    }
    sqrt(num) / (1.0 + sqrt(na) + sqrt(nm))
}

fn residuals_kernel(
    state: &IterateState,
    data: &ProblemData,
    cfg: &SolverConfig,
    x_beta: &[f64],
    d_beta: &[f64],
    scratch_p: &mut [f64],
) -> KktResiduals {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    let phi_mu = sqrt(sq(&state.z, x_beta) + sq(&state.alpha, &state.beta) + sq(&state.gamma, d_beta));

    let n = data.n() as f64;
    let (mut num, mut nw, mut nm) = (0.0, 0.0, 0.0);
    for ((yi, zi), mi) in data.y().iter().zip(&state.z).zip(&state.mu_z) {
        let w = yi - zi;
        let v = w + mi;
        let prox = match cfg.loss {
            LossKind::Huber => huber_prox_unchecked(v, cfg.tau, 1.0, n),
            LossKind::Squared => squared_prox_unchecked(v, 1.0, n),
        };
        num += (w - prox) * (w - prox);
        nw += w * w;
        nm += mi * mi;
    }
    let phi_z = sqrt(num) / (1.0 + sqrt(nw) + sqrt(nm));

    let phi_alpha = l1_residual(&state.alpha, &state.mu_alpha, cfg.lambda1);
    let phi_gamma = l1_residual(&state.gamma, &state.mu_gamma, cfg.lambda2);

    // X~^T mu = X^T mu_z + mu_alpha + D^T mu_gamma
    data.x().tmul_vec_into(&state.mu_z, scratch_p);
    let p = scratch_p.len();
    let g = &state.mu_gamma;
    let mut acc = 0.0;
    for j in 0..p {
        let dt = if j == 0 {
            -g[0]
        } else if j == p - 1 {
            g[p - 2]
        } else {
            g[j - 1] - g[j]
        };
        let v = scratch_p[j] + state.mu_alpha[j] + dt;
        acc += v * v;
    }
    let phi_beta = sqrt(acc);

    KktResiduals::from_parts(phi_mu, phi_z, phi_alpha, phi_beta, phi_gamma)
}

// ---------------------------------------------------------------------------
// Single-step operations. Each reads `state.beta` as the freshly updated beta.

fn check_state(state: &IterateState, data: &ProblemData, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    state.check_dims(data.n(), data.p())
}

/// Solves `M beta = X~^T (theta + mu / sigma)`.
pub fn update_beta(
    state: &IterateState,
    fac: &NormalFactorization,
    data: &ProblemData,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    check_state(state, data, cfg)?;
    fac.check(data)?;
    let mut rhs = vec![0.0; data.p()];
    let mut scratch = vec![0.0; data.n()];
    beta_rhs_into(state, data, cfg.sigma, &mut rhs, &mut scratch);
    fac.chol.solve_in_place(&mut rhs);
    Ok(rhs)
}

/// `soft_threshold(beta - mu_alpha / sigma, lambda1 / sigma)`.
pub fn update_alpha(state: &IterateState, cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_len("mu_alpha", state.beta.len(), state.mu_alpha.len())?;
    let mut out = vec![0.0; state.beta.len()];
    alpha_into(&state.beta, &state.mu_alpha, cfg, &mut out);
    Ok(out)
}

/// `soft_threshold(D beta - mu_gamma / sigma, lambda2 / sigma)`.
pub fn update_gamma(state: &IterateState, cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let p = state.beta.len();
    if p < 2 {
        return Err(Error::InvalidArgument("difference operator needs p >= 2"));
    }
    check_len("mu_gamma", p - 1, state.mu_gamma.len())?;
    let mut d = vec![0.0; p - 1];
    apply_d_into(&state.beta, &mut d);
    let mut out = vec![0.0; p - 1];
    gamma_into(&d, &state.mu_gamma, cfg, &mut out);
    Ok(out)
}

pub fn update_z(state: &IterateState, data: &ProblemData, cfg: &SolverConfig) -> Result<Vec<f64>> {
    check_state(state, data, cfg)?;
    let xb = data.x().mul_vec(&state.beta)?;
    let mut out = vec![0.0; data.n()];
    z_into(data.y(), &xb, &state.mu_z, cfg, &mut out);
    Ok(out)
}

/// `mu += pi sigma (theta - X~ beta)`, blockwise.
pub fn update_mu(state: &IterateState, data: &ProblemData, cfg: &SolverConfig) -> Result<Multipliers> {
    check_state(state, data, cfg)?;
    let step = cfg.step_length * cfg.sigma;
    let xb = data.x().mul_vec(&state.beta)?;
    let mut db = vec![0.0; data.p() - 1];
    apply_d_into(&state.beta, &mut db);
    let mut out = Multipliers {
        z: state.mu_z.clone(),
        alpha: state.mu_alpha.clone(),
        gamma: state.mu_gamma.clone(),
    };
    mu_step(&mut out.z, &state.z, &xb, step);
    mu_step(&mut out.alpha, &state.alpha, &state.beta, step);
    mu_step(&mut out.gamma, &state.gamma, &db, step);
    Ok(out)
}

pub fn kkt_residuals(state: &IterateState, data: &ProblemData, cfg: &SolverConfig) -> Result<KktResiduals> {
    check_state(state, data, cfg)?;
    let xb = data.x().mul_vec(&state.beta)?;
    let mut db = vec![0.0; data.p() - 1];
    apply_d_into(&state.beta, &mut db);
    let mut scratch = vec![0.0; data.p()];
    Ok(residuals_kernel(state, data, cfg, &xb, &db, &mut scratch))
}

// ---------------------------------------------------------------------------

struct Workspace {
    x_beta: Vec<f64>,
    d_beta: Vec<f64>,
    rhs: Vec<f64>,
    scratch_n: Vec<f64>,
    scratch_p: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, p: usize) -> Self {
        Self {
            x_beta: vec![0.0; n],
            d_beta: vec![0.0; p - 1],
            rhs: vec![0.0; p],
            scratch_n: vec![0.0; n],
            scratch_p: vec![0.0; p],
        }
    }
}

fn iterate(state: &mut IterateState, ws: &mut Workspace, fac: &NormalFactorization, data: &ProblemData, cfg: &SolverConfig) {
    beta_rhs_into(state, data, cfg.sigma, &mut ws.rhs, &mut ws.scratch_n);
    fac.chol.solve_in_place(&mut ws.rhs);
    core::mem::swap(&mut state.beta, &mut ws.rhs);

    alpha_into(&state.beta, &state.mu_alpha, cfg, &mut state.alpha);
    apply_d_into(&state.beta, &mut ws.d_beta);
    gamma_into(&ws.d_beta, &state.mu_gamma, cfg, &mut state.gamma);
    data.x().mul_vec_into(&state.beta, &mut ws.x_beta);
    z_into(data.y(), &ws.x_beta, &state.mu_z, cfg, &mut state.z);

    let step = cfg.step_length * cfg.sigma;
    mu_step(&mut state.mu_z, &state.z, &ws.x_beta, step);
    mu_step(&mut state.mu_alpha, &state.alpha, &state.beta, step);
    mu_step(&mut state.mu_gamma, &state.gamma, &ws.d_beta, step);
}

/// Runs the iteration from `init` (all zeros by default) until the largest KKT
/// residual drops below `cfg.tol` or `cfg.max_iter` iterations have run.
pub fn solve(data: &ProblemData, cfg: &SolverConfig, init: Option<&IterateState>) -> Result<SolveResult> {
    cfg.validate()?;
    let fac = NormalFactorization::new(data)?;
    solve_with_factorization(data, &fac, cfg, init)
}

/// [`solve`] with a precomputed factorization of the same design.
pub fn solve_with_factorization(
    data: &ProblemData,
    fac: &NormalFactorization,
    cfg: &SolverConfig,
    init: Option<&IterateState>,
) -> Result<SolveResult> {
    cfg.validate()?;
    fac.check(data)?;
    let (n, p) = (data.n(), data.p());
    let mut state = match init {
        Some(s) => {
            s.check_dims(n, p)?;
            if !s.is_finite() {
                return Err(Error::NonFinite("initial state"));
            }
            s.clone()
        }
        None => IterateState::zeros(n, p),
    };
    let mut ws = Workspace::new(n, p);
    let mut history = Vec::with_capacity(cfg.max_iter.min(4096));
    let mut status = SolveStatus::MaxIterReached;

    for k in 1..=cfg.max_iter {
        iterate(&mut state, &mut ws, fac, data, cfg);
        let r = residuals_kernel(&state, data, cfg, &ws.x_beta, &ws.d_beta, &mut ws.scratch_p);
        if !r.res.is_finite() || !all_finite(&state.beta) {
            return Err(Error::Diverged { iteration: k });
        }
        history.push(r);
        if r.res < cfg.tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(SolveResult {
        beta: Coefficients::new(state.beta.clone())?,
        iterations: history.len(),
        residual_history: history,
        status,
        state,
    })
}

/// Same pipeline with the squared loss `(1/2n) ||y - X beta||^2`; `tau` is ignored.
pub fn solve_least_squares(data: &ProblemData, cfg: &SolverConfig) -> Result<SolveResult> {
    solve(data, &cfg.with_loss(LossKind::Squared), None)
}
