//! Sparse storage, banded direct solver and small dense utilities.

mod banded;
mod dense;
mod sparse;

pub use banded::{relative_residual, solve_direct, BandedLu, SINGULAR_PIVOT_RTOL, SOLVE_RTOL};
pub use dense::{cholesky_factor, smallest_singular_value, DenseMatrix};
pub use sparse::SparseMatrixCsr;
