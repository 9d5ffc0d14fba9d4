//! Reference computations for the test suites.
//!
//! Everything here is written against plain `Vec<Vec<f64>>` row-major data and
//! shares no code with `fusedhuber-core`, so it can serve as an independent
//! check of the solver, the proximal operators and the losses.

/// Minimizes `f` over the grid `lo, lo + step, ..., hi` and returns the best point.
pub fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let count = ((hi - lo) / step).floor() as usize;
    let mut best_x = lo;
    let mut best_f = f(lo);
    for k in 1..=count {
        let x = lo + k as f64 * step;
        let fx = f(x);
        if fx < best_f {
            best_f = fx;
            best_x = x;
        }
    }
    best_x
}

/// Composite Simpson rule with `intervals` (rounded up to even) sub-intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = if intervals % 2 == 0 { intervals } else { intervals + 1 };
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Central finite difference of a scalar function.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Huber function, transcribed directly from its piecewise definition.
pub fn huber(x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        0.5 * x * x
    } else {
        tau * x.abs() - 0.5 * tau * tau
    }
}

fn clip(x: f64, tau: f64) -> f64 {
    x.max(-tau).min(tau)
}

fn soft(x: f64, c: f64) -> f64 {
    if x > c {
        x - c
    } else if x < -c {
        x + c
    } else {
        0.0
    }
}

/// `Some(tau)` selects the Huber loss, `None` the squared loss `(1/2n)||r||^2`.
pub type Loss = Option<f64>;

fn loss_value(r: &[f64], loss: Loss) -> f64 {
    let n = r.len() as f64;
    match loss {
        Some(tau) => r.iter().map(|&v| huber(v, tau)).sum::<f64>() / n,
        None => r.iter().map(|&v| 0.5 * v * v).sum::<f64>() / n,
    }
}

fn residuals(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(row, &yi)| yi - row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Loss + `l1 * ||beta||_1 + l2 * sum |beta_{j+1} - beta_j|`.
pub fn fused_objective(x: &[Vec<f64>], y: &[f64], beta: &[f64], loss: Loss, l1: f64, l2: f64) -> f64 {
    let r = residuals(x, y, beta);
    let tv: f64 = beta.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    loss_value(&r, loss) + l1 * beta.iter().map(|b| b.abs()).sum::<f64>() + l2 * tv
}

fn loss_gradient(x: &[Vec<f64>], y: &[f64], beta: &[f64], loss: Loss) -> Vec<f64> {
    let n = x.len() as f64;
    let r = residuals(x, y, beta);
    let mut g = vec![0.0; beta.len()];
    for (row, ri) in x.iter().zip(&r) {
        let psi = match loss {
            Some(tau) => clip(*ri, tau),
            None => *ri,
        };
        for (gj, xij) in g.iter_mut().zip(row) {
            *gj -= psi * xij / n;
        }
    }
    g
}

/// Largest eigenvalue of `X^T X` by power iteration.
pub fn gram_spectral_norm(x: &[Vec<f64>]) -> f64 {
    let p = x[0].len();
    let mut v: Vec<f64> = (0..p).map(|j| 1.0 + 0.01 * j as f64).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let xv: Vec<f64> = x.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let mut w = vec![0.0; p];
        for (row, s) in x.iter().zip(&xv) {
            for (wj, a) in w.iter_mut().zip(row) {
                *wj += a * s;
            }
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm;
        v = w.into_iter().map(|a| a / norm).collect();
    }
    est
}

/// Exact proximal map of `lambda * sum |x_{k+1} - x_k|` (1-D total variation),
/// Condat's direct algorithm.
pub fn tv_prox(input: &[f64], lambda: f64) -> Vec<f64> {
    let width = input.len();
    let mut output = vec![0.0; width];
    if width == 0 {
        return output;
    }
    if lambda <= 0.0 {
        return input.to_vec();
    }
    let minlambda = -lambda;
    let twolambda = 2.0 * lambda;
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;
    loop {
        while k == width - 1 {
            if umin < 0.0 {
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k;
                vmin = input[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    output[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k;
                vmax = input[k];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return output;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            loop {
                output[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k;
            kplus = k;
            vmin = input[k];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                output[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kminus = k;
            kplus = k;
            vmax = input[k];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            k += 1;
            if umin >= lambda {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                umin = lambda;
            }
            if umax <= minlambda {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                umax = minlambda;
            }
        }
    }
}

/// Proximal map of `l1 ||x||_1 + l2 ||Dx||_1`: total-variation prox followed by
/// soft-thresholding.
pub fn fused_lasso_prox(v: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    tv_prox(v, l2).into_iter().map(|a| soft(a, l1)).collect()
}

/// Accelerated proximal gradient (FISTA) with the exact fused-lasso prox.
pub fn fista_reference(x: &[Vec<f64>], y: &[f64], loss: Loss, l1: f64, l2: f64, iterations: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let p = x[0].len();
    let lipschitz = gram_spectral_norm(x) / n;
    let step = 1.0 / lipschitz;
    let mut beta = vec![0.0; p];
    let mut momentum = beta.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let g = loss_gradient(x, y, &momentum, loss);
        let v: Vec<f64> = momentum.iter().zip(&g).map(|(m, gj)| m - step * gj).collect();
        let next = fused_lasso_prox(&v, step * l1, step * l2);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / t_next;
        momentum = next.iter().zip(&beta).map(|(a, b)| a + w * (a - b)).collect();
        beta = next;
        t = t_next;
    }
    beta
}

/// Proximal subgradient descent with diminishing steps `c / sqrt(k + 1)`: the
/// smooth loss contributes its gradient, the fused term a subgradient, and the
/// l1 term is handled by its prox. Returns the best iterate seen.
pub fn prox_subgradient_reference(
    x: &[Vec<f64>],
    y: &[f64],
    loss: Loss,
    l1: f64,
    l2: f64,
    iterations: usize,
) -> Vec<f64> {
    let n = x.len() as f64;
    let p = x[0].len();
    let base = n / gram_spectral_norm(x);
    let mut beta = vec![0.0; p];
    let mut best = beta.clone();
    let mut best_f = fused_objective(x, y, &beta, loss, l1, l2);
    for k in 0..iterations {
        let step = base / ((k + 1) as f64).sqrt();
        let mut g = loss_gradient(x, y, &beta, loss);
        for j in 0..p - 1 {
            let s = (beta[j + 1] - beta[j]).signum() * if beta[j + 1] == beta[j] { 0.0 } else { 1.0 };
            g[j] -= l2 * s;
            g[j + 1] += l2 * s;
        }
        beta = beta.iter().zip(&g).map(|(b, gj)| soft(b - step * gj, step * l1)).collect();
        let f = fused_objective(x, y, &beta, loss, l1, l2);
        if f < best_f {
            best_f = f;
            best = beta.clone();
        }
    }
    best
}

/// Solves a dense square system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Ordinary least squares through the normal equations `X^T X b = X^T y`.
pub fn normal_equation_fit(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    gauss_solve(&xtx, &xty)
}

/// `X^T X`, computed entry by entry.
pub fn transpose_multiply(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = x[0].len();
    (0..p)
        .map(|i| (0..p).map(|j| x.iter().map(|row| row[i] * row[j]).sum()).collect())
        .collect()
}
