//! Decoupling of multivariate rational and polynomial functions into
//! single-variable vector functions, built purely from function samples on
//! a Kronecker grid.
//!
//! The pieces, bottom up:
//!
//! * [`numkit`]: complex dense kernels (Kronecker, Hadamard, flattening).
//! * [`lagrange`]: Lagrange coefficients, normalized basis, barycentric form.
//! * [`loewner`]: Loewner matrices, rank/degree detection, null vectors and
//!   recovery of denominator values from data.
//! * [`decouple`]: weight stacks, per-variable vector functions `Φ_l` and
//!   the row-wise Hadamard reconstruction.
//! * [`recursive`]: the recursive slice-folding reconstruction.
//! * [`funcspec`]: expression parsing, evaluation, grid sampling and degree
//!   detection.

pub mod decouple;
pub mod error;
pub mod evaluator;
pub mod funcspec;
pub mod lagrange;
pub mod loewner;
pub mod numkit;
pub mod recursive;

pub use error::{Error, Result};
pub use evaluator::Evaluator;
pub use num_complex::Complex64;
