//! Dense real linear algebra and seeded random generation.
//!
//! All arithmetic is `f64`. Every routine is a pure function of its inputs
//! (and of the [`SeededRng`] state where one is taken), so replaying a seed
//! reproduces results bit for bit.

mod eigen;
mod matrix;
mod qr;
mod ridge;
mod rng;
mod symmetric;

pub use eigen::{eigenvalues, spectral_radius, ComplexValue, MAX_EIGEN_DIM};
pub use matrix::{dot, format_real, norm2, Matrix};
pub use qr::{qr_decompose, random_orthogonal};
pub use ridge::{cholesky, lu_solve, ridge_solve, solve_symmetric};
pub use rng::{derive_seed, gaussian_matrix, uniform_matrix, SeededRng, RNG_ALGORITHM};
pub use symmetric::{singular_values, spectral_norm, symmetric_eigenvalues};
