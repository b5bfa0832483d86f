//! Small dense kernels used by the TT algorithms. Everything here is
//! sequential and column-major.

pub mod chol;
pub mod householder;
pub mod mat;
pub mod sparse;
pub mod svd;

pub use chol::{pivoted_cholesky, CholOutcome, PivotedCholesky};
pub use householder::HouseholderQr;
pub use mat::{gram, matmul, matmul_nt, matmul_tn, mul_upper_t, upper_mul, Mat, MatRef};
pub use sparse::CsrMatrix;
pub use svd::{svd, Svd};
