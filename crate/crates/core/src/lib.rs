#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN along with nonpositive values.

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod molecule;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
