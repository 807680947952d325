//! Small dense linear algebra for the least-squares problem family:
//! row-major matrices, Gram products, a Cholesky factorization, and
//! power/inverse-power iterations for extreme eigenvalues of symmetric
//! positive semidefinite matrices.
//!
//! This is deliberately minimal — the solvers only ever need `A x`,
//! `A^T y`, `A^T A`, one factorization per problem build, and eigenvalue
//! estimates good to a few digits for strong-convexity bookkeeping.

use crate::vecmath;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DenseError {
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    DataLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is not positive definite (pivot {pivot} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DenseError> {
        if rows == 0 || cols == 0 {
            return Err(DenseError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(DenseError::DataLength {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !vecmath::all_finite(&data) {
            return Err(DenseError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (i, oi) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *oi = vecmath::dot(row, x);
        }
        out
    }

    /// `A^T y`.
    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (oj, rj) in out.iter_mut().zip(row) {
                *oj += yi * rj;
            }
        }
        out
    }

    /// `A^T A` (symmetric, `cols x cols`).
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for r in 0..self.rows {
            let row = &self.data[r * n..(r + 1) * n];
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for (j, rj) in row.iter().enumerate().skip(i) {
                    data[i * n + j] += ri * rj;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                data[i * n + j] = data[j * n + i];
            }
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    /// Adds `rho` to the diagonal (in place); the matrix must be square.
    pub fn add_diagonal(&mut self, rho: f64) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self.data[i * self.cols + i] += rho;
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    /// Row-major lower triangle, including the diagonal.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `m = L L^T`. Fails on any nonpositive pivot.
    pub fn factor(m: &DenseMatrix) -> Result<Self, DenseError> {
        assert_eq!(m.rows, m.cols);
        let n = m.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = m.get(j, j);
            for k in 0..j {
                pivot -= l[j * n + k] * l[j * n + k];
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(DenseError::NotPositiveDefinite { col: j, pivot });
            }
            let d = pivot.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    /// Solves `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        // Forward: L z = b.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[i * n + k] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        // Backward: L^T x = z.
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * z[k];
            }
            z[i] = s / self.l[i * n + i];
        }
        z
    }

    /// Solves `L^T x = b` only (useful for dual points of the Gram system).
    pub fn solve_transposed_factor(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// `L^T x` (multiplication by the transposed factor).
    pub fn mul_transposed_factor(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, oi) in out.iter_mut().enumerate() {
            // Row i of L^T is column i of L, entries k >= i.
            let mut s = 0.0;
            for (k, xk) in x.iter().enumerate().skip(i) {
                s += self.l[k * n + i] * xk;
            }
            *oi = s;
        }
        out
    }
}

fn normalized_start(n: usize) -> Vec<f64> {
    // Deterministic, never orthogonal to an eigenvector basis in practice:
    // a fixed irrational-phase pattern with all entries nonzero.
    let v: Vec<f64> = (0..n)
        .map(|k| 1.0 + 0.01 * ((k % 17) as f64 - 8.0))
        .collect();
    let s = vecmath::norm(&v);
    v.into_iter().map(|x| x / s).collect()
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration. Returns an estimate accurate to roughly `tol` (relative).
pub fn symmetric_max_eigenvalue(m: &DenseMatrix, tol: f64, max_iters: usize) -> f64 {
    assert_eq!(m.rows, m.cols);
    let mut v = normalized_start(m.rows);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = m.matvec(&v);
        let nw = vecmath::norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = vecmath::dot(&v, &w);
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= tol * (1.0 + next.abs()) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Smallest eigenvalue of a symmetric positive semidefinite matrix by
/// shifted inverse-power iteration. Returns `None` when the matrix is
/// numerically singular (smallest eigenvalue indistinguishable from 0 at
/// the shift level).
pub fn symmetric_min_eigenvalue(m: &DenseMatrix, tol: f64, max_iters: usize) -> Option<f64> {
    assert_eq!(m.rows, m.cols);
    // Shift by a tiny multiple of the largest eigenvalue so the factorization
    // succeeds even for singular inputs, then invert-iterate on (M + shift I).
    let top = symmetric_max_eigenvalue(m, 1e-10, 10_000).max(1.0);
    let shift = 1e-12 * top;
    let mut shifted = m.clone();
    shifted.add_diagonal(shift);
    let chol = Cholesky::factor(&shifted).ok()?;
    let mut v = normalized_start(m.rows);
    let mut mu = 0.0;
    for _ in 0..max_iters {
        let w = chol.solve(&v);
        let nw = vecmath::norm(&w);
        if !nw.is_finite() || nw == 0.0 {
            return None;
        }
        // Rayleigh quotient of the shifted inverse: 1/nu estimates the
        // smallest eigenvalue of the shifted matrix.
        let nu = vecmath::dot(&v, &w);
        v = w.into_iter().map(|x| x / nw).collect();
        let next = 1.0 / nu - shift;
        if (next - mu).abs() <= tol * (1.0 + next.abs()) {
            let lambda = next.max(0.0);
            // Treat anything at the shift's noise floor as singular.
            if lambda <= 10.0 * shift {
                return None;
            }
            return Some(lambda);
        }
        mu = next;
    }
    let lambda = mu.max(0.0);
    if lambda <= 10.0 * shift {
        None
    } else {
        Some(lambda)
    }
}
