//! Dense real matrices and the linear-algebra operations the solver is built on.
//!
//! A vector is a one-column matrix; every iterate, observation, constraint
//! matrix and multiplier in this crate is a [`Matrix`]. Entries are finite
//! f64 by construction (NaN/Inf are rejected at the boundary).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix with row-major constructors.
///
/// Invariants: `rows >= 1`, `cols >= 1`, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    inner: DMatrix<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches and non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} entries", rows * cols),
                format!("{} entries", data.len()),
                "Matrix::from_row_major",
            ));
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: k / cols,
                    col: k % cols,
                    value: v,
                });
            }
        }
        Ok(Matrix {
            inner: DMatrix::from_row_slice(rows, cols, &data),
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in &rows {
            if r.len() != cols {
                return Err(Error::shape(
                    format!("{cols} cols"),
                    format!("{} cols", r.len()),
                    "Matrix::from_rows",
                ));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_row_major(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix shape must be >= 1x1");
        Matrix {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        Matrix {
            inner: DMatrix::identity(n, n),
        }
    }

    /// Column vector from a slice.
    pub fn column(data: &[f64]) -> Result<Self> {
        Matrix::from_row_major(data.len(), 1, data.to_vec())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Matrix {
            inner: DMatrix::from_fn(rows, cols, |i, j| f(i, j)),
        }
    }

    pub(crate) fn inner(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.inner[(row, col)] = value;
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.shape() == other.shape()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix {
            inner: self.inner.transpose(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "add: shape mismatch");
        Matrix {
            inner: &self.inner + &other.inner,
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "sub: shape mismatch");
        Matrix {
            inner: &self.inner - &other.inner,
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            inner: &self.inner * s,
        }
    }

    pub fn neg(&self) -> Matrix {
        self.scale(-1.0)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols(),
            other.rows(),
            "matmul: inner dimensions must agree"
        );
        Matrix {
            inner: &self.inner * &other.inner,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            inner: self.inner.map(f),
        }
    }

    /// Solves `self * x = rhs` for symmetric positive definite `self`.
    pub fn solve_spd(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows() != self.cols() || self.rows() != rhs.rows() {
            return Err(Error::shape(
                format!("square {0}x{0} vs {0} rhs rows", self.rows()),
                format!("{:?} vs {:?}", self.shape(), rhs.shape()),
                "solve_spd",
            ));
        }
        let chol = self
            .inner
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("matrix is not positive definite".into()))?;
        Ok(Matrix {
            inner: chol.solve(&rhs.inner),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }
}

/// Thin SVD `m = u * diag(singular_values) * vt` with
/// `k = min(rows, cols)`, singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_truncated(self.singular_values.len())
    }

    /// Reconstruction keeping only the `rank` leading singular triplets.
    pub fn reconstruct_truncated(&self, rank: usize) -> Matrix {
        let m = self.u.rows();
        let n = self.vt.cols();
        let k = rank.min(self.singular_values.len());
        if k == 0 {
            return Matrix::zeros(m, n);
        }
        let mut u_scaled = DMatrix::zeros(m, k);
        for t in 0..k {
            u_scaled.set_column(t, &(self.u.inner.column(t) * self.singular_values[t]));
        }
        Matrix {
            inner: u_scaled * self.vt.inner.rows(0, k),
        }
    }

    /// Sum of singular values.
    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }
}

/// Thin SVD via a deterministic iterative kernel. Non-convergence is
/// reported as an explicit error, never returned as garbage.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let svd = m
        .inner
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("SVD iteration did not converge".to_string()))?;
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD returned no U factor".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD returned no V^T factor".into()))?;
    let k = svd.singular_values.len();

    // Kernel output order is not part of its contract; sort nonincreasing.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let mut u_sorted = DMatrix::zeros(u.nrows(), k);
    let mut vt_sorted = DMatrix::zeros(k, vt.ncols());
    let mut s_sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        s_sorted.push(svd.singular_values[src]);
        u_sorted.set_column(dst, &u.column(src));
        vt_sorted.set_row(dst, &vt.row(src));
    }
    if s_sorted.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Numeric("SVD produced invalid singular values".into()));
    }
    Ok(SvdResult {
        u: Matrix { inner: u_sorted },
        singular_values: s_sorted,
        vt: Matrix { inner: vt_sorted },
    })
}

/// Frobenius norm.
pub fn fro_norm(m: &Matrix) -> f64 {
    m.inner.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Frobenius inner product `sum_ij a_ij b_ij`.
pub fn inner(a: &Matrix, b: &Matrix) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::shape(
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
            "inner",
        ));
    }
    Ok(a.inner.iter().zip(b.inner.iter()).map(|(x, y)| x * y).sum())
}

/// Smallest eigenvalue of `C C^T`, computed as the square of the smallest
/// singular value of `C`. Returns exactly 0 for row-rank-deficient input
/// (more rows than columns, or smallest singular value at noise level).
pub fn spectral_norm_lower_bound(c: &Matrix) -> Result<f64> {
    if c.rows() > c.cols() {
        return Ok(0.0);
    }
    let s = svd(c)?.singular_values;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smin <= 1e-12 * smax.max(1.0) {
        return Ok(0.0);
    }
    Ok(smin * smin)
}
