use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::float::{dot, sqrt};
use crate::matrix::Matrix;

/// Lower-triangular Cholesky factor `L` with `A = L L^T`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let dim = a.nrows();
        check_len("cholesky input columns", dim, a.ncols())?;
        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let (ri, rj) = (&lower[i * dim..i * dim + j], &lower[j * dim..j * dim + j]);
                let s = a.get(i, j) - dot(ri, rj);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { pivot: i });
                    }
                    lower[i * dim + i] = sqrt(s);
                } else {
                    lower[i * dim + j] = s / lower[j * dim + j];
                }
            }
        }
        Ok(Self { dim, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        // L y = b
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.lower[i * n + i];
        }
        // L^T x = y, sweeping rows of L so memory access stays contiguous
        for i in (0..n).rev() {
            b[i] /= self.lower[i * n + i];
            let xi = b[i];
            let row = &self.lower[i * n..i * n + i];
            for (bk, l) in b[..i].iter_mut().zip(row) {
                *bk -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("cholesky right-hand side", self.dim, b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn lower(&self) -> Matrix {
        Matrix::from_row_major(self.dim, self.dim, self.lower.clone()).expect("square storage")
    }

    /// `L L^T`.
    pub fn reconstruct(&self) -> Matrix {
        let l = self.lower();
        l.matmul(&l.transpose()).expect("square factor")
    }
}
