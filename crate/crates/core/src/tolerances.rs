//! Numerical tolerances shared by the solver, the checkers and the acceptance suite.

/// Largest allowed `dt · max|ξ| · max|v|`.
pub const CFL_LIMIT: f64 = 0.5;

/// Pure-mode operator results against their symbols (relative).
pub const SPECTRAL_EXACTNESS: f64 = 1e-12;

/// Per-step growth allowed in `‖θ‖_p`, relative to `‖θ0‖_p`.
pub const MAX_PRINCIPLE_STEP: f64 = 1e-8;

/// Overshoot allowed outside `[0, 1]` for data in `[0, 1]`.
pub const POSITIVITY: f64 = 1e-10;

/// Accepted range of the energy-residual ratio per halving of dt (4 ± 30%).
pub const ENERGY_RATIO: (f64, f64) = (2.8, 5.2);

/// Largest admissible cross term of the sign split.
pub const CROSS_TERM: f64 = 1e-10;

/// Picard iteration: largest successive-increment ratio, iteration cap,
/// stopping tolerance, and allowed gap to the time-stepped reference in units
/// of the quadrature error estimate.
pub const PICARD_RATIO: f64 = 0.5;
pub const PICARD_MAX_ITER: usize = 40;
pub const PICARD_TOLERANCE: f64 = 1e-10;
pub const PICARD_REFERENCE_FACTOR: f64 = 10.0;

/// Transfer identity: residual at the base dt, required gain per halving, and
/// the residual allowed without transport.
pub const TRANSFER_RESIDUAL: f64 = 1e-3;
pub const TRANSFER_REFINEMENT: f64 = 3.0;
pub const TRANSFER_ZERO_VELOCITY: f64 = 1e-8;

/// Molecule ledger: largest acceptable `K` and smallest acceptable `c0`.
pub const LEDGER_K_MAX: f64 = 1e3;
pub const LEDGER_C0_MIN: f64 = 1e-4;

/// Relative change allowed in the Hölder seminorm when N doubles.
pub const HOLDER_REFINEMENT: f64 = 0.10;
