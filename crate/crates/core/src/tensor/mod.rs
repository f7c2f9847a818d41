//! Dense and sparse `f64` kernels.

mod csr;
mod dense;

pub use csr::CsrMatrix;
pub use dense::DenseMatrix;

