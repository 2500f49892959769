//! Periodic grids, fields and Fourier multipliers.

mod fft;
mod field;
mod grid;
mod multiplier;
mod operators;

pub(crate) use fft::{plan_for, Plan};
pub use field::{Direction, Field, Representation, VectorField};
pub use grid::{Grid, Point};
pub use multiplier::{apply_multiplier, Multiplier};
pub use operators::{
    dealias, derivative, divergence_of_product, fractional_laplacian, gradient, riesz_transform,
    semigroup_step,
};
