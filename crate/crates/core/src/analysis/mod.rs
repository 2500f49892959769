//! Discrete function-space norms and inequality checkers.

mod chain;
mod norms;

pub use chain::{
    check_besov_chain, check_distance_power_lemma, distance_power_violations, ChainReport,
    ChainValues,
};
pub use norms::{
    besov_seminorm, besov_seminorm_pow, bmo_norm, dissipation_functional, gradient_energy,
    holder_seminorm, linf_norm, lp_norm, range_monitor, sobolev_alpha_energy, BmoReport,
    NormReport, NormSettings,
};
