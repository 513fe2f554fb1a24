//! Dense row-major linear algebra for small systems.
//!
//! Everything the steppers need lives here: matrix/vector arithmetic, the
//! two matrix norms used by the theory, an LU solver with partial pivoting,
//! a Moore–Penrose pseudo-inverse built on a one-sided Jacobi SVD, and the
//! projectors induced by a singular matrix.
//!
//! Conventions:
//! - `Matrix` stores `f64` entries row-major; dimensions are validated at
//!   construction, element access panics on out-of-range indices.
//! - `norm_1` is the operator 1-norm, the maximum absolute **column** sum.
//! - `Vector::norm` is Euclidean.
//!
//! The implementations are deliberately plain dense algorithms: the systems
//! this crate targets have a handful of equations, so robustness and
//! reproducibility (no parallel reductions, no architecture-dependent
//! kernels) matter more than asymptotic speed.

// index loops mirror the textbook kernels; iterator rewrites obscure them
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

/// Relative pivot threshold for [`solve_linear`] and [`LuFactors`]: a pivot
/// whose magnitude is at most `SINGULAR_PIVOT_RTOL * norm_1(M)` flags the
/// matrix as numerically singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// Default relative cutoff for singular values in [`pseudo_inverse`]:
/// singular values at or below `DEFAULT_RANK_TOL * sigma_max` are treated
/// as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_ORTHO_TOL: f64 = 1e-14;

/// Errors from the dense linear-algebra routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// Operand shapes are incompatible for the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A pivot fell below the relative threshold during factorization.
    #[error("matrix is numerically singular (pivot {pivot:.3e} <= threshold {threshold:.3e})")]
    Singular { pivot: f64, threshold: f64 },
    /// The Jacobi SVD sweep limit was exhausted before convergence.
    #[error("SVD did not converge within {0} sweeps")]
    SvdNoConvergence(usize),
    /// Construction data was malformed (wrong length, empty dimension, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),
}

/// Dense matrix with row-major `f64` storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data.
    ///
    /// # Errors
    /// Returns [`LinalgError::InvalidData`] if either dimension is zero or
    /// `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::InvalidData(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::InvalidData(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Zero matrix of the given shape.
    ///
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Square matrix with `d` on the diagonal and zeros elsewhere.
    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    ///
    /// # Errors
    /// Returns [`LinalgError::InvalidData`] on ragged or empty input.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LinalgError::InvalidData("empty row set".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::InvalidData(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a `rows x cols` matrix entry by entry from `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entry `(i, j)`.
    ///
    /// # Panics
    /// Panics if `i >= rows` or `j >= cols`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        self.data[i * self.cols + j]
    }

    /// Overwrites entry `(i, j)`.
    ///
    /// # Panics
    /// Panics if `i >= rows` or `j >= cols`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a slice.
    ///
    /// # Panics
    /// Panics if `i >= rows`.
    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows, "row {i} out of range");
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] unless
    /// `self.cols == other.rows`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * x`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] unless `self.cols == x.dim()`.
    pub fn mul_vec(&self, x: &Vector) -> Result<Vector, LinalgError> {
        if self.cols != x.dim() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot apply {}x{} to a vector of dimension {}",
                self.rows,
                self.cols,
                x.dim()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (&a, &b) in row.iter().zip(x.as_slice()) {
                acc += a * b;
            }
            *o = acc;
        }
        Ok(Vector::from_vec(out))
    }

    /// Entrywise sum `self + other`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on shape mismatch.
    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise difference `self - other`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on shape mismatch.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`, the workhorse for assembling `A - h B` and
    /// `I + h M1`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on shape mismatch.
    pub fn add_scaled(&self, c: f64, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a + c * b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot combine {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Entrywise scaling `c * self`.
    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| c * a).collect(),
        }
    }

    /// Operator 1-norm: the maximum absolute column sum
    /// `max_j sum_i |m[i][j]|`.
    pub fn norm_1(&self) -> f64 {
        let mut col_sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, s) in col_sums.iter_mut().enumerate() {
                *s += self.data[i * self.cols + j].abs();
            }
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    /// Frobenius norm, the Euclidean norm of the entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&a| a * a).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &a| m.max(a.abs()))
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }
}

/// Dense column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    /// Wraps the given entries. An empty vector is allowed nowhere in this
    /// crate, so construction panics on empty input to fail close to the bug.
    ///
    /// # Panics
    /// Panics if `data` is empty.
    pub fn from_vec(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "vectors must have positive dimension");
        Self { data }
    }

    /// Copies the given entries.
    ///
    /// # Panics
    /// Panics if `data` is empty.
    pub fn from_slice(data: &[f64]) -> Self {
        Self::from_vec(data.to_vec())
    }

    /// Zero vector of dimension `n`.
    ///
    /// # Panics
    /// Panics if `n == 0`.
    pub fn zeros(n: usize) -> Self {
        Self::from_vec(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entry `i`.
    ///
    /// # Panics
    /// Panics if `i >= dim`.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    /// Overwrites entry `i`.
    ///
    /// # Panics
    /// Panics if `i >= dim`.
    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        self.data[i] = v;
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|&a| a * a).sum::<f64>().sqrt()
    }

    /// Inner product with `other`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on length mismatch.
    pub fn dot(&self, other: &Vector) -> Result<f64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch(format!(
                "dot of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    /// Entrywise sum.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on length mismatch.
    pub fn add(&self, other: &Vector) -> Result<Vector, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Entrywise difference.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on length mismatch.
    pub fn sub(&self, other: &Vector) -> Result<Vector, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] on length mismatch.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Result<Vector, LinalgError> {
        self.zip_with(other, |a, b| a + c * b)
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Result<Vector, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot combine vectors of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Vector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Entrywise scaling.
    pub fn scale(&self, c: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|&a| c * a).collect(),
        }
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }
}

/// LU factorization with partial pivoting, reusable across right-hand
/// sides. Factoring once and solving many times is the hot path of the
/// steppers on constant-coefficient problems.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Matrix,
    // pivot[k] = row swapped into position k at elimination step k
    pivots: Vec<usize>,
}

impl LuFactors {
    /// Factors a square matrix.
    ///
    /// # Errors
    /// - [`LinalgError::DimensionMismatch`] if `m` is not square.
    /// - [`LinalgError::Singular`] if any pivot magnitude is at most
    ///   [`SINGULAR_PIVOT_RTOL`]` * norm_1(m)`.
    pub fn factor(m: &Matrix) -> Result<Self, LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "LU factorization needs a square matrix, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let threshold = SINGULAR_PIVOT_RTOL * m.norm_1();
        let mut lu = m.clone();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = lu.data[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu.data[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold {
                return Err(LinalgError::Singular {
                    pivot: best,
                    threshold,
                });
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu.data[k * n + k];
            for i in (k + 1)..n {
                let factor = lu.data[i * n + k] / pivot;
                lu.data[i * n + k] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu.data[i * n + j] -= factor * lu.data[k * n + j];
                    }
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn order(&self) -> usize {
        self.lu.rows
    }

    /// Solves `M x = b` using the stored factorization.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] unless `b.dim()` matches
    /// the matrix order.
    pub fn solve(&self, b: &Vector) -> Result<Vector, LinalgError> {
        let n = self.order();
        if b.dim() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "solve of order {n} with right-hand side of dimension {}",
                b.dim()
            )));
        }
        let mut x = b.data.clone();
        // apply all row interchanges before substituting: the factors
        // store fully permuted rows, so the permutation must be complete
        // before any multiplier is used
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                for i in (k + 1)..n {
                    x[i] -= self.lu.data[i * n + k] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in (k + 1)..n {
                acc -= self.lu.data[k * n + j] * x[j];
            }
            x[k] = acc / self.lu.data[k * n + k];
        }
        Ok(Vector::from_vec(x))
    }

    /// Solves `M X = B` column by column.
    ///
    /// # Errors
    /// Returns [`LinalgError::DimensionMismatch`] unless `b.rows()` matches
    /// the matrix order.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        let n = self.order();
        if b.rows != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "solve of order {n} with right-hand side of {} rows",
                b.rows
            )));
        }
        let mut out = Matrix::zeros(n, b.cols);
        for j in 0..b.cols {
            let col = Vector::from_vec((0..n).map(|i| b.data[i * b.cols + j]).collect());
            let x = self.solve(&col)?;
            for i in 0..n {
                out.data[i * b.cols + j] = x.data[i];
            }
        }
        Ok(out)
    }

    /// Explicit inverse, assembled column by column.
    pub fn inverse(&self) -> Matrix {
        let n = self.order();
        // solve_matrix on the identity cannot hit a dimension error
        self.solve_matrix(&Matrix::identity(n))
            .expect("identity has matching order")
    }
}

/// Solves the square system `M x = b` by LU factorization with partial
/// pivoting.
///
/// # Errors
/// - [`LinalgError::Singular`] when a pivot magnitude is at most
///   [`SINGULAR_PIVOT_RTOL`]` * norm_1(M)` (this also catches the zero
///   matrix, where the threshold itself is zero).
/// - [`LinalgError::DimensionMismatch`] for non-square `M` or a right-hand
///   side of the wrong length.
pub fn solve_linear(m: &Matrix, b: &Vector) -> Result<Vector, LinalgError> {
    LuFactors::factor(m)?.solve(b)
}

/// Thin singular value decomposition `M = U diag(sigma) V^T` with
/// `k = min(rows, cols)` columns in `U` and `V` and `sigma` sorted in
/// descending order.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD. Rotations orthogonalize the columns of a working
/// copy of the (tall) matrix; accumulated rotations form `V`, the column
/// norms are the singular values. For the handful-of-rows matrices this
/// crate handles, Jacobi is both simple and fully accurate.
pub(crate) fn svd(m: &Matrix) -> Result<Svd, LinalgError> {
    if m.rows < m.cols {
        let t = svd_tall(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    svd_tall(m)
}

fn svd_tall(m: &Matrix) -> Result<Svd, LinalgError> {
    debug_assert!(m.rows >= m.cols);
    let rows = m.rows;
    let n = m.cols;
    // column-major working copies keep the rotations cache-friendly
    let mut u: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..rows).map(|i| m.data[i * n + j]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (up, uq) = (&u[p], &u[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for i in 0..rows {
                        a += up[i] * up[i];
                        b += uq[i] * uq[i];
                        g += up[i] * uq[i];
                    }
                    (a, b, g)
                };
                let scale = (alpha * beta).sqrt();
                if scale == 0.0 || gamma.abs() <= JACOBI_ORTHO_TOL * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut u, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::SvdNoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut sigma: Vec<f64> = u
        .iter()
        .map(|col| col.iter().map(|&x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sigma[b]
            .partial_cmp(&sigma[a])
            .expect("finite singular values")
    });

    let mut u_out = Matrix::zeros(rows, n);
    let mut v_out = Matrix::zeros(n, n);
    let mut sigma_out = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        sigma_out[dst] = s;
        if s > 0.0 {
            for i in 0..rows {
                u_out.data[i * n + dst] = u[src][i] / s;
            }
        }
        for i in 0..n {
            v_out.data[i * n + dst] = v[src][i];
        }
    }
    sigma = sigma_out;
    Ok(Svd {
        u: u_out,
        sigma,
        v: v_out,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Moore–Penrose pseudo-inverse via SVD.
///
/// Singular values at or below `rank_tol * sigma_max` are treated as exact
/// zeros, so `rank_tol` decides the numerical rank; [`DEFAULT_RANK_TOL`] is
/// the usual choice. The pseudo-inverse of the zero matrix is the zero
/// matrix of transposed shape.
///
/// # Errors
/// - [`LinalgError::InvalidData`] for a non-finite or negative `rank_tol`.
/// - [`LinalgError::SvdNoConvergence`] if the Jacobi sweeps fail to
///   converge (not observed in practice at these sizes).
pub fn pseudo_inverse(m: &Matrix, rank_tol: f64) -> Result<Matrix, LinalgError> {
    if !rank_tol.is_finite() || rank_tol < 0.0 {
        return Err(LinalgError::InvalidData(format!(
            "rank tolerance must be a nonnegative finite number, got {rank_tol}"
        )));
    }
    let Svd { u, sigma, v } = svd(m)?;
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * sigma_max;
    let k = sigma.len();
    let inv_sigma: Vec<f64> = sigma
        .iter()
        .map(|&s| {
            if s <= cutoff || s == 0.0 {
                0.0
            } else {
                1.0 / s
            }
        })
        .collect();
    // pinv = V diag(inv_sigma) U^T, shape cols x rows
    let mut out = Matrix::zeros(m.cols, m.rows);
    for i in 0..m.cols {
        for j in 0..m.rows {
            let mut acc = 0.0;
            for (l, &is) in inv_sigma.iter().enumerate().take(k) {
                if is != 0.0 {
                    acc += v.data[i * k + l] * is * u.data[j * k + l];
                }
            }
            out.data[i * m.rows + j] = acc;
        }
    }
    Ok(out)
}

/// The three projectors induced by a square matrix `A` and its
/// pseudo-inverse: `P = A⁻A` (onto the differential components),
/// `Q = I - P`, and `R = I - AA⁻` (onto the constraint equations).
///
/// # Errors
/// Returns [`LinalgError::DimensionMismatch`] unless `a` is square and
/// `a_pinv` has the same order.
pub fn projectors(a: &Matrix, a_pinv: &Matrix) -> Result<(Matrix, Matrix, Matrix), LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "projectors need a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if a_pinv.rows != a.rows || a_pinv.cols != a.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "pseudo-inverse shape {}x{} does not match matrix order {}",
            a_pinv.rows, a_pinv.cols, a.rows
        )));
    }
    let n = a.rows;
    let p = a_pinv.mul(a)?;
    let q = Matrix::identity(n).sub(&p)?;
    let r = Matrix::identity(n).sub(&a.mul(a_pinv)?)?;
    Ok((p, q, r))
}
