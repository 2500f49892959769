//! r-molecules and their backward evolution.

mod ledger;
mod spec;
mod transfer;

pub use ledger::{
    iteration_schedule, run_molecule_experiment, LedgerParams, LedgerReport, LedgerRow,
    MoleculeLedger, Schedule, Target,
};
pub use spec::{
    center_velocity, concentration_integral, gamma_of_sigma, make_molecule, make_periodic_molecule,
    unit_ball_volume, validate_molecule, MoleculeCheck, MoleculeSpec, Profile,
};
pub use transfer::{transfer_residual, TransferReport};
