//! Special functions, Hermitian linear algebra and seeded sampling.

mod linalg;
mod rng;
mod special;

pub use linalg::{cholesky, HermitianMatrix};
pub use rng::{sample_complex_gaussian, RngStream};
pub use special::{chi2_cdf, chi2_inv, chi2_pdf, gamma_p, ln_gamma, noncentral_chi2_cdf};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },
    #[error("matrix has no Cholesky factor")]
    NotFactored,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
