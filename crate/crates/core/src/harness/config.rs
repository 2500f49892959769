//! Run configuration: a flat sectioned TOML document.
//!
//! ```toml
//! preset = "transfer"      # optional
//! dt = 1e-3
//! t_end = 0.5
//! seed = 7
//! initial = "random_smooth"
//!
//! [grid]
//! n = 128
//!
//! [equation]
//! alpha = 0.25
//!
//! [molecule]
//! r = 0.05
//! sigma = 0.9
//! omega = 0.4
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolution::{EquationSpec, TimeDirection, VelocitySource};
use crate::molecule::{LedgerParams, MoleculeSpec};
use crate::spectral::Grid;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    #[serde(default = "default_dim")]
    dim: usize,
    n: usize,
    #[serde(default = "default_length")]
    length: f64,
}

fn default_dim() -> usize {
    2
}

fn default_length() -> f64 {
    2.0 * PI
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationSection {
    alpha: f64,
    #[serde(default)]
    epsilon_visc: f64,
    #[serde(default = "default_source")]
    velocity: VelocitySource,
    #[serde(default)]
    mollify_eps: f64,
    /// Amplitude `U` of the prescribed shear `(U sin(2π m x2/L), 0)`.
    #[serde(default = "default_one")]
    shear_amplitude: f64,
    /// Wavenumber `m` of the prescribed shear.
    #[serde(default = "default_wavenumber")]
    shear_wavenumber: u32,
}

fn default_source() -> VelocitySource {
    VelocitySource::SqgCoupled
}

fn default_one() -> f64 {
    1.0
}

fn default_wavenumber() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoleculeSection {
    r: f64,
    /// Defaults to the box center.
    x0: Option<Vec<f64>>,
    sigma: f64,
    omega: f64,
    #[serde(default = "default_safety")]
    safety: f64,
}

fn default_safety() -> f64 {
    0.9
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write a diagnostics row every this many steps.
    pub csv_every: usize,
    /// Write a snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv_every: 1,
            snapshot_every: 0,
        }
    }
}

/// Initial data for `fracdrift run`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Mean-zero random trigonometric polynomial with modes `|k| <= 4`, max 1.
    #[default]
    RandomSmooth,
    /// Cosine-power bump with range `[0, 1]`.
    Bump,
    /// Indicator of the disk of radius `L/4` about the box center.
    Disk,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    preset: Option<String>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_t_end")]
    t_end: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    initial: InitialData,
    grid: GridSection,
    equation: EquationSection,
    molecule: Option<MoleculeSection>,
    ledger: Option<LedgerParams>,
    #[serde(default)]
    output: OutputConfig,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_end() -> f64 {
    1.0
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub grid: Grid,
    pub equation: EquationSpec,
    pub shear_amplitude: f64,
    pub shear_wavenumber: u32,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub initial: InitialData,
    pub molecule: Option<MoleculeSpec>,
    pub ledger: Option<LedgerParams>,
    pub output: OutputConfig,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let grid = Grid::new(doc.grid.dim, doc.grid.n, doc.grid.length)?;
    let eq = &doc.equation;
    let equation = EquationSpec {
        alpha: eq.alpha,
        epsilon_visc: eq.epsilon_visc,
        velocity_source: eq.velocity,
        mollify_eps: eq.mollify_eps,
        time_direction: TimeDirection::Forward,
    };
    equation.validate()?;
    if equation.velocity_source == VelocitySource::SqgCoupled && grid.dim() != 2 {
        return Err(Error::Config(
            "the SQG velocity needs a 2-dimensional grid".into(),
        ));
    }
    if !(eq.shear_amplitude.is_finite()) {
        return Err(Error::Config("shear_amplitude must be finite".into()));
    }
    if !(doc.dt > 0.0 && doc.t_end > 0.0) {
        return Err(Error::Config(format!(
            "dt and t_end must be positive (dt = {}, t_end = {})",
            doc.dt, doc.t_end
        )));
    }
    if doc.output.csv_every == 0 {
        return Err(Error::Config("output.csv_every must be at least 1".into()));
    }
    let molecule = doc
        .molecule
        .as_ref()
        .map(|m| {
            let mut x0 = [0.5 * grid.box_length(); 2];
            if let Some(given) = &m.x0 {
                if given.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "molecule.x0 has {} entries on a {}-dimensional grid",
                        given.len(),
                        grid.dim()
                    )));
                }
                x0[..given.len()].copy_from_slice(given);
            }
            if grid.dim() == 1 {
                x0[1] = 0.0;
            }
            MoleculeSpec::new(grid.dim(), m.r, x0, m.sigma, m.omega, equation.alpha)?
                .with_safety(m.safety)
        })
        .transpose()?;
    if let Some(l) = &doc.ledger {
        l.validate()?;
    }
    Ok(RunConfig {
        preset: doc.preset,
        grid,
        equation,
        shear_amplitude: eq.shear_amplitude,
        shear_wavenumber: eq.shear_wavenumber,
        dt: doc.dt,
        t_end: doc.t_end,
        seed: doc.seed,
        initial: doc.initial,
        molecule,
        ledger: doc.ledger,
        output: doc.output,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nn = 32\n[equation]\nalpha = 0.25\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.points_per_axis(), 32);
        assert_eq!(c.grid.dim(), 2);
        assert!((c.grid.box_length() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(c.equation.velocity_source, VelocitySource::SqgCoupled);
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.output, OutputConfig::default());
        assert!(c.molecule.is_none() && c.preset.is_none());
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = parse_config("[grid]\nn = 32\nsize = 3\n[equation]\nalpha = 0.25\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("size") && msg.contains("length"), "{msg}");
    }

    #[test]
    fn molecule_conditions_are_named() {
        let base = format!("{MINIMAL}[molecule]\nr = 0.1\n");
        let err = parse_config(&format!("{base}sigma = 0.5\nomega = 0.4\n")).unwrap_err();
        assert!(err.to_string().contains("n/(n+2α) < sigma"), "{err}");
        let err = parse_config(&format!("{base}sigma = 0.9\nomega = 0.6\n")).unwrap_err();
        assert!(err.to_string().contains("omega < 2α"), "{err}");
        let ok = parse_config(&format!("{base}sigma = 0.9\nomega = 0.4\n")).unwrap();
        assert_eq!(ok.molecule.unwrap().x0, [PI, PI]);
    }

    #[test]
    fn grid_and_equation_are_revalidated() {
        assert!(parse_config("[grid]\nn = 30\n[equation]\nalpha = 0.25\n").is_err());
        assert!(parse_config("[grid]\nn = 32\n[equation]\nalpha = 0.75\n").is_err());
        assert!(parse_config("[grid]\nn = 32\n").is_err());
        let text = "[grid]\nn = 32\n[equation]\nalpha = 0.25\n[ledger]\neta = 2.0\n";
        assert!(parse_config(text).is_err());
    }
}
