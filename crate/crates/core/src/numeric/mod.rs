//! Scalars, dense matrices and the linear-algebra kernels built on them.

pub mod eigen;
pub mod linalg;
pub mod lp;
pub mod matrix;
pub mod scalar;

pub use eigen::{sym_eigen, SymEigen};
pub use linalg::{
    independent_rows, intersect_kernels, jacobi_svd, left_null_space, null_space,
    orthonormal_columns, rank, solve_square, SubspaceBasis, Svd, DEFAULT_RANK_TOL,
};
pub use matrix::{dot, norm2, Matrix};
pub use scalar::{format_rational, parse_rational, Mode, ParseRationalError, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumericError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0} requires exact arithmetic")]
    ExactRequired(&'static str),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("{0} did not terminate within its iteration limit")]
    IterationLimit(&'static str),
}
