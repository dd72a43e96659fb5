//! Small dense matrices for the normal equations (a handful of unknowns).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// `Jᵀ·J` for a column-major view of the Jacobian rows.
    pub fn gram(&self) -> Matrix {
        self.transpose().mul(self)
    }

    /// Inverse of a symmetric positive (semi)definite matrix.
    ///
    /// The matrix is first equilibrated to unit diagonal; a pivot below
    /// `rel_tol` in that scaling is reported as `Err(column)`.
    pub fn inverse_spd(&self, rel_tol: f64) -> Result<Matrix, usize> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut scale = vec![0.0; n];
        for (i, s) in scale.iter_mut().enumerate() {
            let d = self[(i, i)];
            if !(d > 0.0) {
                return Err(i);
            }
            *s = 1.0 / libm::sqrt(d);
        }
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = self[(i, j)] * scale[i] * scale[j];
            }
        }
        let inv = a.inverse_gauss_jordan(rel_tol)?;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = inv[(i, j)] * scale[i] * scale[j];
            }
        }
        Ok(out)
    }

    fn inverse_gauss_jordan(&self, tol: f64) -> Result<Matrix, usize> {
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
                .unwrap();
            if a[(pivot_row, col)].abs() < tol {
                return Err(col);
            }
            a.swap_rows(col, pivot_row);
            inv.swap_rows(col, pivot_row);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r != col {
                    let factor = a[(r, col)];
                    if factor != 0.0 {
                        for j in 0..n {
                            a[(r, j)] -= factor * a[(col, j)];
                            inv[(r, j)] -= factor * inv[(col, j)];
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    /// Solves `self · x = rhs` for symmetric positive definite `self`.
    pub fn solve_spd(&self, rhs: &[f64], rel_tol: f64) -> Result<Vec<f64>, usize> {
        Ok(self.inverse_spd(rel_tol)?.mul_vec(rhs))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_inverse() {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 0)] = 4.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(1, 1)] = 3.0;
        let inv = m.inverse_spd(1e-12).unwrap();
        let id = m.mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_detected() {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 0)] = 1.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        m[(1, 1)] = 1.0;
        assert_eq!(m.inverse_spd(1e-10), Err(1));
        assert_eq!(Matrix::zeros(1, 1).inverse_spd(1e-10), Err(0));
    }
}
