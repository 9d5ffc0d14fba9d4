//! Empirical checks of the error-bound theory: loss gradient, symmetric
//! Bregman divergence, local Huber Hessian, Gram matrix, sampled restricted
//! eigenvalues, the l1-cone inequality and log-log rate fits.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::difference::DIFFERENCE_INF_NORM;
use crate::error::{check_len, Error, Result};
use crate::float::{cos, ln, norm2_sq, norm_inf, powf, sqrt};
use crate::huber::huber_psi;
use crate::matrix::Matrix;
use crate::model::ProblemData;

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidArgument("tau must be positive"));
    }
    Ok(())
}

/// `grad L_tau(beta) = -(1/n) sum_i psi_tau(y_i - x_i^T beta) x_i`.
pub fn loss_gradient(data: &ProblemData, beta: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let mut r = data.residuals(beta)?;
    let scale = -1.0 / data.n() as f64;
    for v in r.iter_mut() {
        *v = scale * huber_psi(*v, tau);
    }
    data.x().tmul_vec(&r)
}

/// `<grad L_tau(beta1) - grad L_tau(beta2), beta1 - beta2>`; nonnegative by convexity.
pub fn bregman_symmetric(beta1: &[f64], beta2: &[f64], data: &ProblemData, tau: f64) -> Result<f64> {
    check_len("coefficient vectors", beta1.len(), beta2.len())?;
    let g1 = loss_gradient(data, beta1, tau)?;
    let g2 = loss_gradient(data, beta2, tau)?;
    // Summing the symmetric difference product keeps the result exactly symmetric in its arguments.
    Ok(g1.iter().zip(&g2).zip(beta1.iter().zip(beta2)).map(|((a, b), (u, v))| (a - b) * (u - v)).sum())
}

/// `(1/n) sum_i 1(|y_i - x_i^T beta| <= tau) x_i x_i^T`.
pub fn huber_hessian(data: &ProblemData, beta: &[f64], tau: f64) -> Result<Matrix> {
    check_tau(tau)?;
    let r = data.residuals(beta)?;
    let w = 1.0 / data.n() as f64;
    let weights: Vec<f64> = r.iter().map(|v| if v.abs() <= tau { w } else { 0.0 }).collect();
    data.x().weighted_gram(&weights)
}

/// `S_n = (1/n) X^T X`.
pub fn gram_matrix(data: &ProblemData) -> Matrix {
    let w = vec![1.0 / data.n() as f64; data.n()];
    data.x().weighted_gram(&w).expect("one weight per row")
}

/// Constants of the error-bound theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    /// Order of the bounded `(1 + delta)`-th noise moment.
    pub delta: f64,
    pub tau0: f64,
    /// Probability parameter; the bound holds with probability `1 - (1 + 2p) e^{-t}`.
    pub t: f64,
    /// Support size of the true coefficients.
    pub s: usize,
    pub c0: f64,
    /// `lambda2 = b lambda1`.
    pub b: f64,
    /// `||D||_inf`.
    pub d: f64,
    pub m: usize,
    pub r: f64,
    pub kappa_low: f64,
    pub kappa_up: f64,
}

impl TheoryParams {
    /// Parameters with `c0` set to the cone constant implied by `b` and `d = 2`.
    pub fn new(delta: f64, tau0: f64, t: f64, s: usize, b: f64, kappa_low: f64, kappa_up: f64) -> Result<Self> {
        let d = DIFFERENCE_INF_NORM;
        let p = Self {
            delta,
            tau0,
            t,
            s,
            c0: cone_constant(b, d),
            b,
            d,
            m: s.max(1),
            r: 1.0,
            kappa_low,
            kappa_up,
        };
        p.validate(None)?;
        Ok(p)
    }

    pub fn validate(&self, p: Option<usize>) -> Result<()> {
        let positive = [self.delta, self.tau0, self.t, self.c0, self.b, self.d, self.r, self.kappa_low, self.kappa_up];
        if !positive.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidArgument("theory constants must be finite and positive"));
        }
        if self.s == 0 || self.m < self.s {
            return Err(Error::InvalidArgument("theory needs 1 <= s <= m"));
        }
        if self.kappa_low > self.kappa_up {
            return Err(Error::InvalidArgument("kappa_low must not exceed kappa_up"));
        }
        if let Some(p) = p {
            if self.m > p {
                return Err(Error::InvalidArgument("cone support bound m exceeds p"));
            }
        }
        Ok(())
    }

    /// `tau = tau0 (n / t)^{max(1/(1+delta), 1/2)}`.
    pub fn tau_at(&self, n: usize) -> f64 {
        let e = (1.0 / (1.0 + self.delta)).max(0.5);
        self.tau0 * powf(n as f64 / self.t, e)
    }

    /// Smallest admissible `lambda1 = 4 tau0 (t / n)^{min(delta/(1+delta), 1/2)}`.
    pub fn lambda1_at(&self, n: usize) -> f64 {
        let e = (self.delta / (1.0 + self.delta)).min(0.5);
        4.0 * self.tau0 * powf(self.t / n as f64, e)
    }

    pub fn lambda2_at(&self, n: usize) -> f64 {
        self.b * self.lambda1_at(n)
    }

    /// `lambda1 sqrt(s) / kappa_low`.
    pub fn error_bound(&self, n: usize) -> f64 {
        self.lambda1_at(n) * sqrt(self.s as f64) / self.kappa_low
    }
}

/// `(2bd + 3) / (2bd + 1)`.
pub fn cone_constant(b: f64, d: f64) -> f64 {
    (2.0 * b * d + 3.0) / (2.0 * b * d + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReEstimate {
    /// Smallest Rayleigh quotient seen; an upper estimate of the restricted minimum.
    pub rho_minus: f64,
    /// Largest Rayleigh quotient seen; a lower estimate of the restricted maximum.
    pub rho_plus: f64,
}

/// Largest dimension accepted by [`restricted_eigenvalue_estimate`].
pub const RE_MAX_DIM: usize = 20;

fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn gaussian(rng: &mut impl RngCore) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    sqrt(-2.0 * ln(u1)) * cos(core::f64::consts::TAU * u2)
}

/// Supersets of `support` with at most `m` elements, as bitmasks.
fn supersets(p: usize, support_mask: u32, m: usize) -> Vec<u32> {
    (0u32..(1u32 << p))
        .filter(|mask| mask & support_mask == support_mask && mask.count_ones() as usize <= m && *mask != 0)
        .collect()
}

/// Sampled extremes of `u^T M u / u^T u` over the cone
/// `{u : ||u_{J^c}||_1 <= c0 ||u_J||_1}` with `J` ranging over supersets of
/// `support` of size at most `m`.
///
/// For each `J`, the coordinate directions in `J` are evaluated and then
/// `samples_per_set` random Gaussian directions are pulled into the cone by
/// shrinking their `J^c` part. These are estimates, not certificates.
pub fn restricted_eigenvalue_estimate(
    m: &Matrix,
    support: &[usize],
    max_support: usize,
    c0: f64,
    samples_per_set: usize,
    rng: &mut impl RngCore,
) -> Result<ReEstimate> {
    let p = m.nrows();
    check_len("restricted eigenvalue matrix columns", p, m.ncols())?;
    if p > RE_MAX_DIM {
        return Err(Error::InvalidArgument("restricted eigenvalue sampling is limited to p <= 20"));
    }
    if !(c0.is_finite() && c0 >= 0.0) {
        return Err(Error::InvalidArgument("cone constant must be finite and nonnegative"));
    }
    let mut support_mask = 0u32;
    for &j in support {
        if j >= p {
            return Err(Error::InvalidArgument("support index out of range"));
        }
        support_mask |= 1 << j;
    }
    if max_support < support_mask.count_ones() as usize || max_support == 0 {
        return Err(Error::InvalidArgument("max_support must be at least the support size"));
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut record = |u: &[f64]| -> Result<()> {
        let nn = norm2_sq(u);
        if nn > 0.0 {
            let q = m.quadratic_form(u)? / nn;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        Ok(())
    };

    let mut u = vec![0.0; p];
    for mask in supersets(p, support_mask, max_support) {
        let inside = |j: usize| mask & (1 << j) != 0;
        for j in (0..p).filter(|&j| inside(j)) {
            u.iter_mut().for_each(|v| *v = 0.0);
            u[j] = 1.0;
            record(&u)?;
        }
        for _ in 0..samples_per_set {
            for v in u.iter_mut() {
                *v = gaussian(rng);
            }
            let (mut on, mut off) = (0.0, 0.0);
            for (j, v) in u.iter().enumerate() {
                if inside(j) {
                    on += v.abs();
                } else {
                    off += v.abs();
                }
            }
            if off > c0 * on {
                // shrink the off-set part to a random point inside the cone
                let f = if off > 0.0 { c0 * on / off * uniform(rng) } else { 0.0 };
                for (j, v) in u.iter_mut().enumerate() {
                    if !inside(j) {
                        *v *= f;
                    }
                }
            }
            record(&u)?;
        }
    }
    Ok(ReEstimate { rho_minus: lo, rho_plus: hi })
}

/// Outcome of the l1-cone check on a fitted coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeReport {
    /// `||grad L_tau(beta_star)||_inf`.
    pub gradient_sup: f64,
    /// Whether `||grad L_tau(beta_star)||_inf <= lambda1 / 2`, the premise of the cone inequality.
    pub gradient_condition: bool,
    /// `||(beta_hat - beta_star)_{S^c}||_1`.
    pub off_support: f64,
    /// `||(beta_hat - beta_star)_S||_1`.
    pub on_support: f64,
    pub cone_constant: f64,
    /// `off_support <= cone_constant * on_support + tolerance`.
    pub inside_cone: bool,
}

impl ConeReport {
    /// A violation only counts when the premise holds.
    pub fn violated(&self) -> bool {
        self.gradient_condition && !self.inside_cone
    }
}

/// Tolerance added to the right-hand side of the cone inequality.
pub const CONE_TOLERANCE: f64 = 1e-3;

/// Checks the l1-cone inequality with `b = lambda2 / lambda1`, `d = ||D||_inf = 2`
/// and `S` the support of `beta_star`.
pub fn cone_report(
    data: &ProblemData,
    beta_hat: &[f64],
    beta_star: &[f64],
    tau: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<ConeReport> {
    check_len("fitted coefficients", data.p(), beta_hat.len())?;
    check_len("true coefficients", data.p(), beta_star.len())?;
    if !(lambda1.is_finite() && lambda1 > 0.0 && lambda2.is_finite() && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument("cone check needs lambda1 > 0 and lambda2 >= 0"));
    }
    let grad = loss_gradient(data, beta_star, tau)?;
    let gradient_sup = norm_inf(&grad);
    let (mut on, mut off) = (0.0, 0.0);
    for (h, s) in beta_hat.iter().zip(beta_star) {
        if *s != 0.0 {
            on += (h - s).abs();
        } else {
            off += (h - s).abs();
        }
    }
    let c = cone_constant(lambda2 / lambda1, DIFFERENCE_INF_NORM);
    Ok(ConeReport {
        gradient_sup,
        gradient_condition: gradient_sup <= lambda1 / 2.0,
        off_support: off,
        on_support: on,
        cone_constant: c,
        inside_cone: off <= c * on + CONE_TOLERANCE,
    })
}

/// Least-squares slope of `ln(error)` against `ln(n)`.
///
/// `None` when fewer than two distinct sample sizes are given or any error is
/// (numerically) zero, in which case the logarithm is meaningless.
pub fn loglog_slope(ns: &[usize], errors: &[f64]) -> Result<Option<f64>> {
    check_len("errors", ns.len(), errors.len())?;
    if errors.iter().any(|e| !e.is_finite() || *e <= 1e-12) || ns.contains(&0) {
        return Ok(None);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| ln(n as f64)).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| ln(e)).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Ok(None);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(Some(sxy / sxx))
}
