//! Homogenisation toolkit for plasmonic crystals made of conducting sheets.

// `!(x > 0.0)` is used on purpose so that NaN fails the check; index loops
// read closer to the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cellsolver;
pub mod effperm;
pub mod enz;
pub mod error;
pub mod geometry;
pub mod macrosolver;
pub mod materials;
pub mod plot;
pub mod quadrature;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;
