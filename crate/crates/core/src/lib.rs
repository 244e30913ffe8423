//! Fractal interpolation functions with a variable vertical scaling function:
//! vertical scaling matrices and the box dimension of the graph.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod error;
pub mod fif;
pub mod poly;
pub mod rational;
pub mod scaling;
pub mod spectral;

pub use error::{FifError, Result};
