//! Dense row-major matrices and the handful of factorizations the
//! decomposition needs.
//!
//! Products go through `matrixmultiply` with explicit strides so transposed
//! operands never need a copy. Factorizations (QR, pivoted LU, symmetric
//! eigendecomposition) are delegated to `nalgebra`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A dense `rows x cols` matrix of `f64`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_raw(rows, cols, data)
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} in a matrix with {rows} rows",
                bad.len()
            )));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub(crate) fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (s, v) in sq.iter_mut().zip(row) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, false, other, false))
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, true, other, false))
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by ({}x{})ᵀ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, false, other, true))
    }

    /// `selfᵀ * self`.
    pub fn gram(&self) -> Matrix {
        gemm(self, true, self, false)
    }

    /// Elementwise product of two equally sized matrices.
    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "hadamard product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    /// Column-wise Kronecker product. Row `i * b.rows + j` of the result holds
    /// `a[i, r] * b[j, r]` in column `r`.
    pub fn khatri_rao(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.cols {
            return Err(Error::DimensionMismatch(format!(
                "khatri-rao product needs equal column counts, got {} and {}",
                self.cols, b.cols
            )));
        }
        let r = self.cols;
        let mut data = Vec::with_capacity(self.rows * b.rows * r);
        for i in 0..self.rows {
            let arow = &self.data[i * r..(i + 1) * r];
            for brow in b.data.chunks_exact(r.max(1)).take(b.rows) {
                data.extend(arow.iter().zip(brow).map(|(x, y)| x * y));
            }
        }
        Ok(Self::from_raw(self.rows * b.rows, r, data))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

/// Row-major product with optional transposition of either operand.
pub(crate) fn gemm(a: &Matrix, ta: bool, b: &Matrix, tb: bool) -> Matrix {
    let (m, k) = if ta {
        (a.cols, a.rows)
    } else {
        (a.rows, a.cols)
    };
    let (kb, n) = if tb {
        (b.cols, b.rows)
    } else {
        (b.rows, b.cols)
    };
    assert_eq!(k, kb, "inner dimensions must agree");
    let mut out = Matrix::zeros(m, n);
    let (rsa, csa) = strides(a, ta);
    let (rsb, csb) = strides(b, tb);
    gemm_raw(
        m,
        k,
        n,
        &a.data,
        rsa,
        csa,
        &b.data,
        rsb,
        csb,
        &mut out.data,
        n as isize,
        1,
        0.0,
    );
    out
}

fn strides(m: &Matrix, transposed: bool) -> (isize, isize) {
    if transposed {
        (1, m.cols as isize)
    } else {
        (m.cols as isize, 1)
    }
}

/// `c = a * b + beta * c` on raw strided buffers.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_raw(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
    beta: f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    let span = |rows: usize, cols: usize, rs: isize, cs: isize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            ((rows - 1) as isize * rs + (cols - 1) as isize * cs) as usize + 1
        }
    };
    assert!(span(m, k, rsa, csa) <= a.len());
    assert!(span(k, n, rsb, csb) <= b.len());
    assert!(span(m, n, rsc, csc) <= c.len());
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` is borrowed mutably so it cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix.
///
/// Eigenvalues below `n * eps * |λ|_max` are treated as zero.
pub fn pinv_symmetric(m: &Matrix) -> Matrix {
    let n = m.rows;
    if n == 0 {
        return m.clone();
    }
    if n == 1 {
        let v = m.data[0];
        let inv = if v != 0.0 { 1.0 / v } else { 0.0 };
        return Matrix::from_raw(1, 1, vec![inv]);
    }
    let eig = nalgebra::SymmetricEigen::new(m.to_nalgebra());
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tau = n as f64 * f64::EPSILON * lmax;
    let v = &eig.eigenvectors;
    let mut out = Matrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= tau || lambda == 0.0 {
            continue;
        }
        let inv = 1.0 / lambda;
        for i in 0..n {
            let vi = v[(i, k)] * inv;
            for j in 0..n {
                out.data[i * n + j] += vi * v[(j, k)];
            }
        }
    }
    out
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order, with
/// eigenvectors as the columns of the returned matrix.
pub fn symmetric_eigen_desc(m: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = nalgebra::SymmetricEigen::new(m.to_nalgebra());
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix::from_fn(m.rows, m.rows, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Permuted unit-lower-triangular factor `L` of a partially pivoted LU, so
/// that `m = L U`. `L` has `m.rows` rows and `min(rows, cols)` columns.
pub fn lu_lower(m: &Matrix) -> Matrix {
    let lu = nalgebra::LU::new(m.to_nalgebra());
    let (p, mut l, _) = lu.unpack();
    p.inv_permute_rows(&mut l);
    Matrix::from_nalgebra(&l)
}

/// Thin Householder QR. Returns the orthonormal factor and the ratio of the
/// smallest to the largest `|R_ii|`, which flags numerical rank collapse.
pub fn thin_qr(m: &Matrix) -> (Matrix, f64) {
    let qr = nalgebra::QR::new(m.to_nalgebra());
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    (Matrix::from_nalgebra(&qr.q()), ratio)
}
