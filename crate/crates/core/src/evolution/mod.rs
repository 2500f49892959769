//! Time integration of the forward and backward-dual equations.

mod equation;
mod picard;
mod stepper;
mod velocity;

pub use equation::{EquationSpec, TimeDirection, VelocitySource};
pub use picard::{
    admissible_time, contraction_bound, picard_solve, picard_solve_with, PicardOptions,
    PicardReport,
};
pub use stepper::{
    etd_step, run_backward, run_forward, run_forward_recording, Observer, SolverState, Stepper,
};
pub use velocity::{
    mollify_velocity, spectral_divergence, sqg_velocity, SteadyVelocity, TimeReversed,
    VelocityField, VelocityHistory,
};
