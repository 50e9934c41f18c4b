//! Dense row-major matrices and a Householder least-squares solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
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

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

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

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Appends columns produced by `f(row)` to every row.
    pub fn hstack_with(&self, extra: usize, f: impl Fn(usize, &[f64], &mut Vec<f64>)) -> Matrix {
        let cols = self.cols + extra;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            let before = data.len();
            f(i, self.row(i), &mut data);
            debug_assert_eq!(data.len() - before, extra);
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative rank tolerance applied to the diagonal of R.
pub const RANK_TOL: f64 = 1e-10;

/// Solves min ||A b - y||² by Householder QR.
///
/// Returns an error listing the indices of columns whose diagonal entry in R
/// falls below `RANK_TOL` times the largest column norm of `A`.
pub fn lstsq(a: &Matrix, y: &[f64]) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(m, y.len(), "lstsq: row count mismatch");
    assert!(m >= n, "lstsq: fewer rows than columns");

    // column-major working copy
    let mut q: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut rhs = y.to_vec();
    let max_norm = q
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let tol = RANK_TOL * max_norm.max(f64::MIN_POSITIVE);

    let mut diag = vec![0.0; n];
    let mut deficient = Vec::new();
    for k in 0..n {
        let norm = q[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol {
            deficient.push(k);
            continue;
        }
        let alpha = if q[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = q[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for col in q.iter_mut().skip(k + 1) {
            let s = 2.0 * dot(&v, &col[k..]) / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        let s = 2.0 * dot(&v, &rhs[k..]) / vnorm2;
        for (r, vi) in rhs[k..].iter_mut().zip(&v) {
            *r -= s * vi;
        }
    }
    if !deficient.is_empty() {
        return Err(deficient);
    }

    let mut beta = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= q[j][k] * beta[j];
        }
        beta[k] = s / diag[k];
    }
    Ok(beta)
}

/// Weighted ridge least squares: min Σ wᵢ (yᵢ − aᵢ·b)² + λ Σ_{j ∉ unpenalized} b_j².
///
/// Solved as an augmented ordinary least-squares problem so the same
/// orthogonal solver is used throughout.
pub fn weighted_ridge(
    a: &Matrix,
    y: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
    unpenalized: &[usize],
) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let n = a.ncols();
    let penalized: Vec<usize> = if lambda > 0.0 {
        (0..n).filter(|j| !unpenalized.contains(j)).collect()
    } else {
        Vec::new()
    };
    if weights.is_none() && penalized.is_empty() {
        return lstsq(a, y);
    }
    let m = a.nrows() + penalized.len();
    let mut aug = Matrix::zeros(m, n);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..a.nrows() {
        let sw = weights.map_or(1.0, |w| w[i].sqrt());
        for j in 0..n {
            aug.set(i, j, sw * a.get(i, j));
        }
        rhs.push(sw * y[i]);
    }
    let sl = lambda.sqrt();
    for (r, &j) in penalized.iter().enumerate() {
        aug.set(a.nrows() + r, j, sl);
        rhs.push(0.0);
    }
    lstsq(&aug, &rhs)
}
