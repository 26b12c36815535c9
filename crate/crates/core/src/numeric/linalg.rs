//! Rank, kernels and least squares.
//!
//! Float mode uses a one-sided (Hestenes) Jacobi SVD: rotations act on the
//! columns of `A` until they are mutually orthogonal, so `A V = W` with
//! orthogonal columns whose norms are the singular values. The columns of `V`
//! belonging to negligible singular values span the kernel. Exact mode uses
//! Gauss-Jordan elimination over the rationals.

use num_traits::Zero;

use super::matrix::{dot, Matrix};
use super::scalar::{Rational, Scalar};
use super::NumericError;

/// Default relative rank tolerance for float mode.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Columns spanning a subspace of `ambient_dim`-dimensional coordinate space.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis<T> {
    pub ambient_dim: usize,
    pub basis: Matrix<T>,
}

impl<T: Scalar> SubspaceBasis<T> {
    pub fn empty(ambient_dim: usize) -> Self {
        SubspaceBasis {
            ambient_dim,
            basis: Matrix::zeros(ambient_dim, 0),
        }
    }

    pub fn from_columns(ambient_dim: usize, columns: &[Vec<T>]) -> Result<Self, NumericError> {
        Ok(SubspaceBasis {
            ambient_dim,
            basis: Matrix::from_columns(columns, ambient_dim)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.basis.column(k)
    }

    pub fn vectors(&self) -> Vec<Vec<T>> {
        self.basis.columns()
    }
}

/// Float: number of singular values above `tol * sigma_max`. Exact: exact rank.
pub fn rank<T: Scalar>(m: &Matrix<T>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    T::kernel(m, tol).0
}

pub fn null_space<T: Scalar>(m: &Matrix<T>, tol: f64) -> SubspaceBasis<T> {
    let cols = m.cols();
    if m.rows() == 0 {
        return SubspaceBasis {
            ambient_dim: cols,
            basis: Matrix::identity(cols),
        };
    }
    SubspaceBasis {
        ambient_dim: cols,
        basis: T::kernel(m, tol).1,
    }
}

/// Basis of `{a : a^T m = 0}`.
pub fn left_null_space<T: Scalar>(m: &Matrix<T>, tol: f64) -> SubspaceBasis<T> {
    null_space(&m.transpose(), tol)
}

/// Kernel of the stacked rows `[m; extra]`.
pub fn intersect_kernels<T: Scalar>(
    m: &Matrix<T>,
    extra: &Matrix<T>,
    tol: f64,
) -> Result<SubspaceBasis<T>, NumericError> {
    Ok(null_space(&m.vstack(extra)?, tol))
}

/// Thin SVD from one-sided Jacobi: `A = U diag(s) V^T` with `V` square.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Singular values in column order (unsorted).
    pub singular_values: Vec<f64>,
    /// Rotated columns `A V`; column `j` has norm `singular_values[j]`.
    pub w: Matrix<f64>,
    pub v: Matrix<f64>,
}

pub fn jacobi_svd(a: &Matrix<f64>) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = Matrix::<f64>::identity(n);
    let scale = a.max_abs();
    if scale > 0.0 {
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                    for i in 0..m {
                        let (x, y) = (w[(i, p)], w[(i, q)]);
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let (x, y) = (w[(i, p)], w[(i, q)]);
                        w[(i, p)] = c * x - s * y;
                        w[(i, q)] = s * x + c * y;
                    }
                    for i in 0..n {
                        let (x, y) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * x - s * y;
                        v[(i, q)] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let singular_values = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    Svd {
        singular_values,
        w,
        v,
    }
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.iter().cloned().fold(0.0, f64::max)
    }

    fn is_significant(&self, j: usize, tol: f64) -> bool {
        let smax = self.sigma_max();
        smax > 0.0 && self.singular_values[j] > tol * smax
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let n = self.v.rows();
        let mut x = vec![0.0; n];
        for j in 0..self.singular_values.len() {
            if !self.is_significant(j, tol) {
                continue;
            }
            let s2 = self.singular_values[j] * self.singular_values[j];
            let coeff = dot(&self.w.column(j), b) / s2;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += coeff * self.v[(i, j)];
            }
        }
        x
    }
}

pub(crate) fn float_kernel(m: &Matrix<f64>, tol: f64) -> (usize, Matrix<f64>) {
    let svd = jacobi_svd(m);
    let mut kernel_cols = Vec::new();
    let mut rank = 0;
    for j in 0..m.cols() {
        if svd.is_significant(j, tol) {
            rank += 1;
        } else {
            kernel_cols.push(j);
        }
    }
    (rank, svd.v.select_columns(&kernel_cols))
}

/// Reduced row echelon form; returns the pivot columns.
pub fn rref(m: &mut Matrix<Rational>) -> Vec<usize> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[(i, c)].is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                let tmp = m[(p, j)].clone();
                m[(p, j)] = m[(r, j)].clone();
                m[(r, j)] = tmp;
            }
        }
        let inv = Rational::from_i64(1) / m[(r, c)].clone();
        for j in c..cols {
            m[(r, j)] = m[(r, j)].clone() * inv.clone();
        }
        for i in 0..rows {
            if i == r || m[(i, c)].is_zero() {
                continue;
            }
            let factor = m[(i, c)].clone();
            for j in c..cols {
                let delta = factor.clone() * m[(r, j)].clone();
                m[(i, j)] = m[(i, j)].clone() - delta;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub(crate) fn exact_kernel(m: &Matrix<Rational>) -> (usize, Matrix<Rational>) {
    let cols = m.cols();
    let mut reduced = m.clone();
    let pivots = rref(&mut reduced);
    let mut basis = Vec::new();
    let mut pivot_iter = pivots.iter().peekable();
    let free: Vec<usize> = (0..cols)
        .filter(|c| {
            if pivot_iter.peek() == Some(&c) {
                pivot_iter.next();
                false
            } else {
                true
            }
        })
        .collect();
    for &f in &free {
        let mut v = vec![Rational::zero(); cols];
        v[f] = Rational::from_i64(1);
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -reduced[(r, f)].clone();
        }
        basis.push(v);
    }
    let kernel = Matrix::from_columns(&basis, cols).expect("kernel columns have ambient length");
    (pivots.len(), kernel)
}

/// Indices of a maximal set of linearly independent rows, chosen greedily in order.
pub fn independent_rows<T: Scalar>(m: &Matrix<T>, tol: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut current = 0;
    for i in 0..m.rows() {
        let mut trial = chosen.clone();
        trial.push(i);
        let r = rank(&m.select_rows(&trial), tol);
        if r > current {
            chosen = trial;
            current = r;
        }
    }
    chosen
}

/// Solves a square system by Gaussian elimination with largest-magnitude pivots.
/// `None` when a pivot is negligible relative to `tol * max|a|`.
pub fn solve_square<T: Scalar>(a: &Matrix<T>, b: &[T], tol: f64) -> Option<Vec<T>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return None;
    }
    let scale = T::from_f64(a.max_abs());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| {
            m[(i, c)]
                .abs()
                .partial_cmp(&m[(j, c)].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[(p, c)].is_negligible(&scale, tol) {
            return None;
        }
        if p != c {
            for j in 0..n {
                let tmp = m[(p, j)].clone();
                m[(p, j)] = m[(c, j)].clone();
                m[(c, j)] = tmp;
            }
            rhs.swap(p, c);
        }
        for i in (c + 1)..n {
            if m[(i, c)].is_zero() {
                continue;
            }
            let f = m[(i, c)].clone() / m[(c, c)].clone();
            for j in c..n {
                let d = f.clone() * m[(c, j)].clone();
                m[(i, j)] = m[(i, j)].clone() - d;
            }
            let d = f * rhs[c].clone();
            rhs[i] = rhs[i].clone() - d;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i].clone();
        for j in (i + 1)..n {
            acc = acc - m[(i, j)].clone() * x[j].clone();
        }
        x[i] = acc / m[(i, i)].clone();
    }
    Some(x)
}

/// Orthonormal basis of the column space of `m`.
pub fn orthonormal_columns(m: &Matrix<f64>, tol: f64) -> Matrix<f64> {
    let svd = jacobi_svd(m);
    let cols: Vec<Vec<f64>> = (0..svd.singular_values.len())
        .filter(|&j| svd.is_significant(j, tol))
        .map(|j| {
            let s = svd.singular_values[j];
            (0..m.rows()).map(|i| svd.w[(i, j)] / s).collect()
        })
        .collect();
    Matrix::from_columns(&cols, m.rows()).expect("columns have ambient length")
}
