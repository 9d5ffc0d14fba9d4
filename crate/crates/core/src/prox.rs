//! Proximal operators used by the ADMM subproblems and the KKT residuals.
//!
//! With `prox_f^c(v) = argmin_x f(x) + (1/2c) (x - v)^2`:
//!
//! * `c ||.||_1`             -> soft-thresholding at `c`
//! * `(c ||.||_1)^*`         -> clamping to `[-c, c]`, via Moreau's identity
//! * `(1/n) h_tau`           -> [`huber_prox`]
//! * `(1/2n) (.)^2`          -> [`squared_prox`]

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[inline]
pub fn soft_threshold_scalar(v: f64, c: f64) -> f64 {
    if v > c {
        v - c
    } else if v < -c {
        v + c
    } else {
        0.0
    }
}

pub fn soft_threshold(v: &[f64], c: f64) -> Result<Vec<f64>> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidArgument("threshold must be nonnegative"));
    }
    Ok(v.iter().map(|&x| soft_threshold_scalar(x, c)).collect())
}

/// Prox of the conjugate of `c ||.||_1` (the indicator of the `l_inf` ball of
/// radius `c`), obtained from Moreau's identity `v = S_c(v) + prox_conj(v)`.
pub fn prox_conjugate_l1(v: &[f64], c: f64) -> Result<Vec<f64>> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidArgument("conjugate prox needs c > 0"));
    }
    Ok(v.iter().map(|&x| x - soft_threshold_scalar(x, c)).collect())
}

#[inline]
pub(crate) fn huber_prox_unchecked(v: f64, tau: f64, c: f64, n: f64) -> f64 {
    // Ties at the boundary take the quadratic branch; both branches agree there.
    if v.abs() <= tau * (n + c) / n {
        v * n / (n + c)
    } else {
        v - (c * tau / n).copysign(v)
    }
}

/// Unique minimizer of `(1/n) h_tau(x) + (1/2c) (x - v)^2`.
///
/// Quadratic regime `|v| <= tau (n + c) / n` gives `v n / (n + c)`, otherwise
/// the minimizer is `v - (c tau / n) sgn(v)`.
pub fn huber_prox(v: f64, tau: f64, c: f64, n: usize) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("huber prox argument"));
    }
    if tau.is_nan() || tau <= 0.0 || c.is_nan() || c <= 0.0 || n == 0 {
        return Err(Error::InvalidArgument("huber prox needs tau > 0, c > 0, n >= 1"));
    }
    Ok(huber_prox_unchecked(v, tau, c, n as f64))
}

#[inline]
pub(crate) fn squared_prox_unchecked(v: f64, c: f64, n: f64) -> f64 {
    v * n / (n + c)
}

/// Minimizer of `(1/2n) x^2 + (1/2c) (x - v)^2`.
pub fn squared_prox(v: f64, c: f64, n: usize) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("squared prox argument"));
    }
    if c.is_nan() || c <= 0.0 || n == 0 {
        return Err(Error::InvalidArgument("squared prox needs c > 0, n >= 1"));
    }
    Ok(squared_prox_unchecked(v, c, n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use fusedhuber_oracles::{grid_argmin, huber};
    use proptest::prelude::*;

    fn huber_prox_grid(v: f64, tau: f64, c: f64, n: usize) -> f64 {
        let half = 3.0 * (tau + v.abs());
        let nf = n as f64;
        grid_argmin(|x| huber(x, tau) / nf + (x - v) * (x - v) / (2.0 * c), v - half, v + half, 1e-4)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[0.3], 0.5).unwrap(), vec![0.0]);
        let grid = grid_argmin(|x| 0.5 * x.abs() + 0.5 * (x - 2.0) * (x - 2.0), -3.0, 3.0, 1e-4);
        let got = soft_threshold(&[2.0], 0.5).unwrap()[0];
        assert_eq!(got, 1.5);
        assert!((got - grid).abs() < 2e-4);
        assert_eq!(soft_threshold(&[-2.0], 0.5).unwrap(), vec![-1.5]);
        assert!(soft_threshold(&[1.0], -0.1).is_err());
    }

    #[test]
    fn huber_prox_examples() {
        assert_eq!(huber_prox(0.0, 1.3, 0.7, 5).unwrap(), 0.0);
        let linear = huber_prox(10.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(linear, 9.0);
        assert!((linear - huber_prox_grid(10.0, 1.0, 1.0, 1)).abs() < 2e-4);
        let quad = huber_prox(1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(quad, 0.5);
        assert!((quad - huber_prox_grid(1.0, 1.0, 1.0, 1)).abs() < 2e-4);
        assert!(huber_prox(f64::NAN, 1.0, 1.0, 1).is_err());
        assert!(huber_prox(1.0, 0.0, 1.0, 1).is_err());
        assert!(huber_prox(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(prox_conjugate_l1(&[0.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(prox_conjugate_l1(&[5.0], 1.0).unwrap(), vec![1.0]);
        assert_eq!(prox_conjugate_l1(&[-0.3], 1.0).unwrap(), vec![-0.3]);
        assert!(prox_conjugate_l1(&[1.0], 0.0).is_err());
    }

    #[test]
    fn huber_prox_branches_meet_at_boundary() {
        for (tau, c, n) in [(1.0, 1.0, 1usize), (1.345, 10.0, 100), (0.3, 0.05, 7)] {
            let nf = n as f64;
            let b = tau * (nf + c) / nf;
            let quad = b * nf / (nf + c);
            let lin = b - c * tau / nf;
            assert!((quad - lin).abs() < 1e-12);
            assert!((huber_prox(b, tau, c, n).unwrap() - lin).abs() < 1e-12);
            assert!((huber_prox(-b, tau, c, n).unwrap() + lin).abs() < 1e-12);
        }
    }

    #[test]
    fn squared_prox_is_infinite_tau_limit() {
        for v in [-40.0, -1.0, 0.0, 0.25, 17.0] {
            assert_eq!(squared_prox(v, 0.5, 9).unwrap(), huber_prox(v, f64::INFINITY, 0.5, 9).unwrap());
        }
    }

    proptest! {
        #[test]
        fn moreau_identity(v in prop::collection::vec(-100.0f64..100.0, 1..20), c in 0.001f64..50.0) {
            let s = soft_threshold(&v, c).unwrap();
            let q = prox_conjugate_l1(&v, c).unwrap();
            for ((vi, si), qi) in v.iter().zip(&s).zip(&q) {
                prop_assert!((vi - (si + qi)).abs() < 1e-12);
                prop_assert!(qi.abs() <= c + 1e-12);
            }
        }

        #[test]
        fn soft_threshold_nonexpansive(
            u in prop::collection::vec(-10.0f64..10.0, 5),
            v in prop::collection::vec(-10.0f64..10.0, 5),
            c in 0.0f64..5.0,
        ) {
            let su = soft_threshold(&u, c).unwrap();
            let sv = soft_threshold(&v, c).unwrap();
            let lhs: f64 = su.iter().zip(&sv).map(|(a, b)| (a - b) * (a - b)).sum();
            let rhs: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn huber_prox_symmetric_and_monotone(v in -50.0f64..50.0, dv in 0.0f64..5.0, tau in 0.01f64..10.0, c in 0.01f64..20.0, n in 1usize..200) {
            let a = huber_prox(v, tau, c, n).unwrap();
            prop_assert_eq!(huber_prox(-v, tau, c, n).unwrap(), -a);
            prop_assert!(huber_prox(v + dv, tau, c, n).unwrap() >= a);
        }
    }
}
