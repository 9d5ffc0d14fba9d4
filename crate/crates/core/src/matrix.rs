use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::float::dot;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("matrix storage", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len("matrix row", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, and a zero-column matrix has no meaningful rows
        self.data.chunks_exact(self.cols.max(1)).take(if self.cols == 0 { 0 } else { self.rows })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `out = self * v`.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.rows()) {
            *o = dot(row, v);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("matrix-vector product", self.cols, v.len())?;
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `out = self^T * v`.
    pub fn tmul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &s) in self.rows().zip(v) {
            if s != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * s;
                }
            }
        }
    }

    pub fn tmul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("transposed matrix-vector product", self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        self.tmul_vec_into(v, &mut out);
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_len("matrix product", self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `sum_i w_i x_i x_i^T` over rows `x_i`, accumulated into the upper
    /// triangle and mirrored.
    pub fn weighted_gram(&self, weights: &[f64]) -> Result<Matrix> {
        check_len("gram weights", self.rows, weights.len())?;
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for (row, &w) in self.rows().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for a in 0..p {
                let s = w * row[a];
                if s == 0.0 {
                    continue;
                }
                let dst = &mut g.data[a * p..(a + 1) * p];
                for b in a..p {
                    dst[b] += s * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g.data[a * p + b] = g.data[b * p + a];
            }
        }
        Ok(g)
    }

    /// Quadratic form `v^T self v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::InvalidArgument("quadratic form needs a square matrix"));
        }
        check_len("quadratic form", self.cols, v.len())?;
        Ok(self.rows().zip(v).map(|(row, vi)| vi * dot(row, v)).sum())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Matrix with the columns taken in the order of `order`.
    pub fn select_columns(&self, order: &[usize]) -> Result<Matrix> {
        if order.iter().any(|&j| j >= self.cols) {
            return Err(Error::InvalidArgument("column index out of range"));
        }
        let mut data = Vec::with_capacity(self.rows * order.len());
        for row in self.rows() {
            data.extend(order.iter().map(|&j| row[j]));
        }
        Ok(Matrix { rows: self.rows, cols: order.len(), data })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Matrix> {
        if rows.iter().any(|&i| i >= self.rows) {
            return Err(Error::InvalidArgument("row index out of range"));
        }
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix { rows: rows.len(), cols: self.cols, data })
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        crate::float::norm_inf(&self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn products_agree_with_transpose() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap();
        let v = [0.5, -2.0];
        let a = m.tmul_vec(&v).unwrap();
        let b = m.transpose().mul_vec(&v).unwrap();
        assert_eq!(a, b);
        let g = m.weighted_gram(&[1.0, 1.0]).unwrap();
        assert_eq!(g, m.transpose().matmul(&m).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(Matrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        let m = Matrix::identity(2);
        assert!(m.mul_vec(&[1.0]).is_err());
        assert!(m.select_columns(&[2]).is_err());
    }
}
