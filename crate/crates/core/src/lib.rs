//! Randomized sketching with CountSketch and CountGauss (`T = G * S`), and
//! the algorithms built on it: anchor extraction for separable nonnegative
//! matrix factorization, margin checks for linear SVMs under projection, and
//! Monte-Carlo checks of the sketch's moment and distributional behaviour.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! multi-threaded drivers live in the `countgauss-cli` crate.
//!
//! All randomness flows through [`SeededRng`]; the same seed reproduces the
//! same transform bit for bit.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod distcheck;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod nmf;
pub mod rng;
pub mod sketch;
pub mod stats;
pub mod svm;

pub use error::{Error, Result};
pub use matrix::{gaussian_matrix, DenseMatrix, MatrixRef, SparseMatrix};
pub use rng::{mix64, SeededRng};
pub use sketch::{CountGaussTransform, CountSketchMap, SrhtSpec};
