//! Numerical core for trace dynamics: Grassmann-graded scalars, operator matrices,
//! trace polynomials, operator Hamilton flow, canonical-ensemble sampling and
//! gravastar structure integration.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grassmann;
pub mod gravastar;
pub mod linalg;
pub mod matrix;
pub mod dynamics;
pub mod ensemble;
pub mod poly;
pub mod scalar;

pub use error::{Error, Result};
pub use grassmann::{Grassmann, Parity, MAX_GENERATORS};
pub use matrix::{ComplexMatrix, GradedMatrix, Grading, OperatorMatrix};
pub use num_complex::Complex64;
pub use scalar::Scalar;
