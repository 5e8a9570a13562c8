//! Pricing and term-structure engine for Bachelier's market model.

// Comparisons such as `!(x > 0.0)` also reject NaN; rational-approximation
// coefficients are kept exactly as published.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod curve;
pub mod error;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod pde;
pub mod simulate;
pub mod validate;

pub use error::{Error, Result};
