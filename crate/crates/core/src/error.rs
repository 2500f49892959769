use thiserror::Error;

/// Errors raised by the solver, the analysis routines and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid or run configuration that cannot be realized.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Operator input that fails a structural check (e.g. symmetry).
    #[error("validation error: {0}")]
    Validation(String),

    /// Fields living on different grids, or a field in the wrong representation.
    #[error("shape error: {0}")]
    Shape(String),

    /// Operation not available for this dimension.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A ball or cube too small to be resolved on the grid.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// The explicit transport step would violate the CFL bound.
    #[error("CFL violation: dt = {dt:e} exceeds the stable bound; advisory dt = {advisory:e}")]
    Cfl { dt: f64, advisory: f64 },

    /// The field became NaN or infinite; carries the last finite state.
    #[error("non-finite values at t = {time}, step {step}")]
    NonFinite {
        time: f64,
        step: usize,
        last_good: Box<crate::evolution::SolverState>,
    },

    /// Time requested outside the stored velocity history.
    #[error("velocity history error: {0}")]
    History(String),

    /// The Picard iteration stopped contracting.
    #[error(
        "Picard iteration diverged: contraction ratio above 1 for 3 consecutive iterations ({0:?})"
    )]
    Divergence(Vec<f64>),

    /// Molecule could not be built with the requested parameters.
    #[error("molecule construction error: {0}")]
    Construction(String),

    /// Snapshot or CSV content that does not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
