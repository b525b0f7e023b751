//! Small dense complex linear algebra.
//!
//! Everything here targets matrices of at most a few dozen entries, so the
//! factorizations are plain cyclic Jacobi iterations with fixed phase
//! conventions:
//!
//! * eigenvectors: largest-magnitude component real and positive;
//! * right singular vectors: last component real and nonnegative, with the
//!   matching left singular vector rotated by the same phase.

mod decomp;
mod givens;
mod matrix;

pub use decomp::{hermitian_eig, svd, HermitianEig, SvdResult};
pub use givens::{givens_zero, GivensRotation};
pub use matrix::{inner, norm, normalized, ComplexMatrix, C64};
