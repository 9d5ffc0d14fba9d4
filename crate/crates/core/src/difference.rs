//! The first-difference operator `D: R^p -> R^{p-1}`, `(D b)_k = b_{k+1} - b_k`,
//! and its adjoint. Both are O(p) stencils; `D` is never stored.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

#[inline]
pub(crate) fn apply_d_into(beta: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len() + 1, beta.len());
    for (o, w) in out.iter_mut().zip(beta.windows(2)) {
        *o = w[1] - w[0];
    }
}

/// `(D^T v)_j = v_{j-1} - v_j` with `v_0 = v_p = 0` (1-based).
#[inline]
pub(crate) fn apply_dt_into(v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(v.len() + 1, out.len());
    let m = v.len();
    out[0] = -v[0];
    for j in 1..m {
        out[j] = v[j - 1] - v[j];
    }
    out[m] = v[m - 1];
}

pub fn apply_d(beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() < 2 {
        return Err(Error::InvalidArgument("difference operator needs p >= 2"));
    }
    let mut out = vec![0.0; beta.len() - 1];
    apply_d_into(beta, &mut out);
    Ok(out)
}

pub fn apply_dt(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("difference operator needs p >= 2"));
    }
    let mut out = vec![0.0; v.len() + 1];
    apply_dt_into(v, &mut out);
    Ok(out)
}

/// `||D||_inf`, the maximum absolute row sum of the first-difference matrix.
pub const DIFFERENCE_INF_NORM: f64 = 2.0;

/// Adds `D^T D` (tridiagonal: diagonal `1, 2, ..., 2, 1`, off-diagonals `-1`) to
/// the square matrix `m` in place.
pub(crate) fn add_dtd(m: &mut crate::matrix::Matrix) -> Result<()> {
    let p = m.nrows();
    check_len("D^T D target", p, m.ncols())?;
    if p < 2 {
        return Err(Error::InvalidArgument("difference operator needs p >= 2"));
    }
    for j in 0..p {
        let diag = if j == 0 || j == p - 1 { 1.0 } else { 2.0 };
        m.set(j, j, m.get(j, j) + diag);
        if j + 1 < p {
            m.set(j, j + 1, m.get(j, j + 1) - 1.0);
            m.set(j + 1, j, m.get(j + 1, j) - 1.0);
        }
    }
    Ok(())
}
