//! Dense row-major matrices and the handful of spectral tools the estimators need.
//!
//! The singular value decomposition is delegated to `faer`; everything else
//! (norms, projectors, minimum-norm solves) is built on top of [`svd`].

use std::fmt;
use std::ops::{Index, IndexMut};

use faer::Mat;

use crate::error::{Error, Result};

/// Relative threshold (against the largest singular value) below which a singular
/// value counts as zero when reporting numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Residual allowed, relative to `1 + ‖B‖₂`, for a right-hand side to count as lying
/// in a column space.
pub const COLUMN_SPACE_TOL: f64 = 1e-8;

/// Dense real matrix stored row by row.
///
/// Matrices built from external data have at least one row and one column and only
/// finite entries. Thin factors of rank-deficient decompositions may have zero
/// columns; those are only produced internally through [`Matrix::zeros`].
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// `rows x cols` matrix with `diag` on its main diagonal.
    pub fn from_diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        assert!(diag.len() <= rows.min(cols), "diagonal longer than matrix");
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entries in row-major order.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self * rhs`.
    ///
    /// Panics if the inner dimensions differ.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * rhs` without materialising the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul: row counts differ");
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let b_row = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// Frobenius inner product `tr(selfᵀ rhs)`.
    pub fn inner(&self, rhs: &Matrix) -> f64 {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(pos) => Err(Error::NonFinite {
                row: pos / self.cols,
                col: pos % self.cols,
            }),
            None => Ok(()),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Thin singular value decomposition `A = left · diag(singulars) · rightᵀ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `rows x p` with orthonormal columns.
    pub left: Matrix,
    /// Nonincreasing, nonnegative, length `p = min(rows, cols)`.
    pub singulars: Vec<f64>,
    /// `cols x p` with orthonormal columns.
    pub right: Matrix,
}

impl SvdFactors {
    pub fn width(&self) -> usize {
        self.singulars.len()
    }

    /// `left · diag(weights) · rightᵀ`; zero weights are skipped.
    pub fn reconstruct_with(&self, weights: &[f64]) -> Matrix {
        assert!(weights.len() <= self.width());
        let (m, n) = (self.left.rows(), self.right.rows());
        let mut out = Matrix::zeros(m, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..m {
                let u = w * self.left[(i, k)];
                if u == 0.0 {
                    continue;
                }
                let row = &mut out.data[i * n..(i + 1) * n];
                for (j, o) in row.iter_mut().enumerate() {
                    *o += u * self.right[(j, k)];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(&self.singulars)
    }

    /// Number of singular values above `rank_tol · σ₁`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        count_above(&self.singulars, rank_tol)
    }
}

fn count_above(singulars: &[f64], rank_tol: f64) -> usize {
    match singulars.first() {
        Some(&top) if top > 0.0 => singulars.iter().filter(|&&s| s > rank_tol * top).count(),
        _ => 0,
    }
}

/// Thin SVD of `a`, singular values sorted nonincreasing.
pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    a.check_finite()?;
    let p = a.rows().min(a.cols());
    if p == 0 {
        return Err(Error::Dimension("cannot decompose an empty matrix".into()));
    }
    let no_convergence = |_| Error::SvdNoConvergence {
        rows: a.rows(),
        cols: a.cols(),
    };
    let dec = a.to_faer().thin_svd().map_err(no_convergence)?;
    let (u, v) = (dec.U(), dec.V());
    let s = dec.S().column_vector();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));

    let singulars = order.iter().map(|&k| s[k].max(0.0)).collect();
    let left = Matrix::from_fn(a.rows(), p, |i, k| u[(i, order[k])]);
    let right = Matrix::from_fn(a.cols(), p, |j, k| v[(j, order[k])]);
    Ok(SvdFactors {
        left,
        singulars,
        right,
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    a.check_finite()?;
    if a.rows().min(a.cols()) == 0 {
        return Err(Error::Dimension("cannot decompose an empty matrix".into()));
    }
    let mut s = a.to_faer().singular_values().map_err(|_| Error::SvdNoConvergence {
        rows: a.rows(),
        cols: a.cols(),
    })?;
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Largest singular value.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

pub fn numerical_rank(a: &Matrix, rank_tol: f64) -> Result<usize> {
    Ok(count_above(&singular_values(a)?, rank_tol))
}

/// Which Schatten norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schatten {
    /// Nuclear norm, the sum of singular values.
    One,
    /// Frobenius norm.
    Two,
    /// Operator norm, the largest singular value.
    Infinity,
}

pub fn norm_schatten(a: &Matrix, q: Schatten) -> Result<f64> {
    match q {
        Schatten::One => Ok(singular_values(a)?.iter().sum()),
        Schatten::Two => Ok(a.frobenius_norm()),
        Schatten::Infinity => operator_norm(a),
    }
}

pub fn sup_norm(a: &Matrix) -> f64 {
    a.sup_norm()
}

/// Orthogonal projector onto the column span of a matrix `V`.
#[derive(Debug, Clone)]
pub struct ColumnSpaceProjector {
    /// `l x r`, orthonormal columns spanning col(V).
    basis: Matrix,
    rank: usize,
}

impl ColumnSpaceProjector {
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Ambient dimension `l`.
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// `P_V B`.
    pub fn project(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.dim(), "projector dimension mismatch");
        if self.rank == 0 {
            return Matrix::zeros(b.rows(), b.cols());
        }
        let coords = self.basis.tr_matmul(b);
        self.basis.matmul(&coords)
    }

    /// `P_V⊥ B = B − P_V B`.
    pub fn complement(&self, b: &Matrix) -> Matrix {
        b.sub(&self.project(b))
    }
}

/// Projector onto col(V), keeping left singular vectors whose singular value exceeds
/// `rank_tol · σ₁(V)`. An all-zero `V` yields the zero projector.
pub fn column_projector(v: &Matrix, rank_tol: f64) -> Result<ColumnSpaceProjector> {
    if rank_tol.is_nan() || rank_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    let f = svd(v)?;
    let rank = f.rank(rank_tol);
    let basis = Matrix::from_fn(v.rows(), rank, |i, k| f.left[(i, k)]);
    Ok(ColumnSpaceProjector { basis, rank })
}

/// Minimum-Frobenius-norm `A` with `V A = B`.
///
/// Every column of `B` must lie in col(V) up to `COLUMN_SPACE_TOL · (1 + ‖B‖₂)`.
pub fn min_norm_solve(v: &Matrix, b: &Matrix, rank_tol: f64) -> Result<Matrix> {
    if v.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "V has {} rows but B has {}",
            v.rows(),
            b.rows()
        )));
    }
    if rank_tol.is_nan() || rank_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    b.check_finite()?;
    let f = svd(v)?;
    let r = f.rank(rank_tol);

    let u_r = Matrix::from_fn(v.rows(), r, |i, k| f.left[(i, k)]);
    let coords = if r == 0 {
        Matrix::zeros(0, b.cols())
    } else {
        u_r.tr_matmul(b)
    };

    let tol = COLUMN_SPACE_TOL * (1.0 + b.frobenius_norm());
    let fitted = if r == 0 {
        Matrix::zeros(b.rows(), b.cols())
    } else {
        u_r.matmul(&coords)
    };
    let residual = b.sub(&fitted);
    for j in 0..b.cols() {
        let res = residual.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
        if res > tol {
            return Err(Error::OutsideColumnSpace {
                column: j,
                residual: res,
            });
        }
    }

    // A = W_r diag(1/s_r) U_rᵀ B
    let mut a = Matrix::zeros(v.cols(), b.cols());
    for k in 0..r {
        let inv = 1.0 / f.singulars[k];
        for i in 0..v.cols() {
            let w = f.right[(i, k)] * inv;
            if w == 0.0 {
                continue;
            }
            for j in 0..b.cols() {
                a[(i, j)] += w * coords[(k, j)];
            }
        }
    }
    Ok(a)
}
