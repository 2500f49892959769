//! Configuration, presets, persistence.

mod config;
pub mod data;
mod io;
mod presets;
mod run;

pub use config::{load_config, parse_config, InitialData, OutputConfig, RunConfig};
pub use io::{
    format_number, read_snapshot, write_csv, write_diagnostics_csv, write_snapshot,
    DiagnosticsRecord, DIAGNOSTICS_COLUMNS,
};
pub use presets::{
    run_preset, Criterion, Preset, PresetOptions, PresetOutcome, DUALITY_SIZES, LEDGER_COLUMNS,
    LEDGER_SHEARS, LEDGER_SIZES,
};
pub use run::{initial_field, run_config, RunOutcome, SingleRun};
