//! Diagonalization of definite Hermitian matrix pencils by structured
//! randomized divide-and-conquer.
//!
//! A pencil `(A, B)` of Hermitian matrices is *definite* when its Crawford
//! number `gamma(A, B) = min_{|x|=1} |x^H (A + iB) x|` is positive. Such
//! pencils have real spectra and are simultaneously diagonalizable by a
//! single congruence. This crate provides:
//!
//! - [`pencil`]: the pencil type, norms, the chordal metric and Crawford
//!   number estimation on the unit circle of rotations.
//! - [`randomize`]: structured random perturbations (GUE and diagonal
//!   ensembles), lazy shattering grids and seeded test-pencil generation.
//! - [`pseudospectrum`]: symmetric epsilon-pseudospectrum membership,
//!   definite Bauer-Fike intervals and grid shattering checks.
//! - [`rrf`]: randomized rank-revealing factorizations (RURV/RULV and the
//!   generalized product form GRURV), all inverse-free.
//! - [`halley`]: the inverse-free dynamically weighted Halley iteration
//!   that drives pencil eigenvalues to plus/minus one (the implicit matrix
//!   sign function).
//! - [`solver`]: the divide-and-conquer eigensolver built from the pieces
//!   above, plus the two-step perturb-then-solve pipeline.
//! - [`oracle`]: an independent dense reference solver (rotation plus
//!   Cholesky reduction) used for verification.
//! - [`pencil_file`] / [`records`]: text fixtures and JSON run records for
//!   the command line front end.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` throughout; sizes are desk
//! scale (n up to a few hundred).

// Validation sites use the negated form `!(x > 0.0)` on purpose: it
// rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod halley;
pub(crate) mod linalg;
pub mod oracle;
pub mod pencil;
pub mod pencil_file;
pub mod pseudospectrum;
pub mod randomize;
pub mod records;
pub mod rng;
pub mod rrf;
pub mod solver;

pub use error::{PencilError, Result};
pub use pencil::HermitianPencil;

/// Complex scalar used everywhere in this crate.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix type used everywhere in this crate.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense real vector.
pub type RVec = nalgebra::DVector<f64>;
