//! Arbitrary-precision numerics: scalar wrapper, dense matrices, a cyclic
//! Jacobi symmetric eigensolver and power iteration with Collatz-Wielandt
//! enclosures.

pub mod eigen;
pub mod matrix;
pub mod power;
pub mod real;

pub use eigen::{sym_eigen, EigenDecomposition};
pub use matrix::HPMatrix;
pub use power::{power_iteration, PowerResult};
pub use real::{decimal_digits, HPReal};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric within tolerance: max asymmetry {asym} exceeds {allowed}")]
    NotSymmetric { asym: String, allowed: String },
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("iterate lost strict positivity at index {0}; operator may be reducible or buggy")]
    NonPositiveIterate(usize),
    #[error("cannot parse `{0}` as a float")]
    Parse(String),
}
