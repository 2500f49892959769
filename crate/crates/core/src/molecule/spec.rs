//! r-molecules: construction, validation and the center-transport average.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Point};

/// `n (1/σ - 1)`.
pub fn gamma_of_sigma(n: usize, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!(
            "sigma must lie in (0, 1), got {sigma}"
        )));
    }
    Ok(n as f64 * (1.0 / sigma - 1.0))
}

/// Volume of the unit ball in dimension 1 or 2.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        _ => PI,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `η(y - d e1) - η(y + d e1)` with a Gaussian bump `η`.
    #[default]
    DipoleBump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    pub dim: usize,
    pub r: f64,
    pub x0: Point,
    pub sigma: f64,
    pub gamma: f64,
    pub omega: f64,
    pub profile: Profile,
    pub safety: f64,
}

impl MoleculeSpec {
    /// Checks `n/(n+2α) < σ < 1` and `γ < ω < 2α`; `safety` defaults to 0.9.
    pub fn new(dim: usize, r: f64, x0: Point, sigma: f64, omega: f64, alpha: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Parameter(format!("dim must be 1 or 2, got {dim}")));
        }
        let gamma = gamma_of_sigma(dim, sigma)?;
        let spec = Self {
            dim,
            r,
            x0,
            sigma,
            gamma,
            omega,
            profile: Profile::DipoleBump,
            safety: 0.9,
        };
        spec.validate(alpha)?;
        Ok(spec)
    }

    pub fn with_safety(mut self, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::Parameter(format!(
                "safety must lie in (0, 1], got {safety}"
            )));
        }
        self.safety = safety;
        Ok(self)
    }

    pub fn validate(&self, alpha: f64) -> Result<()> {
        let n = self.dim as f64;
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Parameter(format!(
                "molecule size r must be positive, got {}",
                self.r
            )));
        }
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 0.5], got {alpha}"
            )));
        }
        let lower = n / (n + 2.0 * alpha);
        if !(self.sigma > lower && self.sigma < 1.0) {
            return Err(Error::Parameter(format!(
                "sigma = {} violates n/(n+2α) < sigma < 1 (n/(n+2α) = {lower})",
                self.sigma
            )));
        }
        let gamma = gamma_of_sigma(self.dim, self.sigma)?;
        if (gamma - self.gamma).abs() > 1e-12 * gamma.max(1.0) {
            return Err(Error::Parameter(format!(
                "gamma = {} does not equal n(1/sigma - 1) = {gamma}",
                self.gamma
            )));
        }
        if !(self.omega > gamma && self.omega < 2.0 * alpha) {
            return Err(Error::Parameter(format!(
                "omega = {} violates gamma < omega < 2α (gamma = {gamma}, 2α = {})",
                self.omega,
                2.0 * alpha
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Parameter(format!(
                "safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        Ok(())
    }

    /// Concentration bound `r^{ω-γ}`.
    pub fn concentration_bound(&self) -> f64 {
        self.r.powf(self.omega - self.gamma)
    }

    /// Height bound `r^{-(n+γ)}`.
    pub fn height_bound(&self) -> f64 {
        self.r.powf(-(self.dim as f64 + self.gamma))
    }
}

/// `∫ |f(x)| |x - center|^ω dx` with the periodic distance.
pub fn concentration_integral(f: &Field, center: Point, omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Parameter(format!(
            "omega must lie in (0, 1), got {omega}"
        )));
    }
    let grid = *f.grid();
    let values = f.values();
    let sum: f64 = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| v.abs() * grid.periodic_distance(grid.point(i), center).powf(omega))
        .sum();
    Ok(sum * grid.cell_volume())
}

fn displacement(grid: &Grid, x: Point, c: Point) -> Point {
    let mut d = [0.0; 2];
    for a in 0..grid.dim() {
        d[a] = grid.wrap(x[a] - c[a]);
    }
    d
}

/// Dipole with unit amplitude: `η((x-x0-d e1)/ρ) - η((x-x0+d e1)/ρ)`, `η(y) = exp(-|y|²/2)`.
pub(super) fn dipole(grid: Grid, spec: &MoleculeSpec) -> Field {
    let rho = spec.r / 4.0;
    let d = rho;
    let bump = |y: Point| (-0.5 * (y[0] * y[0] + y[1] * y[1]) / (rho * rho)).exp();
    Field::from_fn(grid, |x| {
        let y = displacement(&grid, x, spec.x0);
        bump([grid.wrap(y[0] - d), y[1]]) - bump([grid.wrap(y[0] + d), y[1]])
    })
}

/// Builds the dipole molecule `A[η(·-d e1) - η(·+d e1)]` at `spec.x0` with
/// `A = safety / r^{n+γ}`, shrinking `A` until the discrete conditions hold.
pub fn make_molecule(spec: &MoleculeSpec, grid: Grid) -> Result<Field> {
    if grid.box_length() < 40.0 * spec.r {
        return Err(Error::Construction(format!(
            "box length {} is below 40 r = {}",
            grid.box_length(),
            40.0 * spec.r
        )));
    }
    build(spec, grid)
}

/// [`make_molecule`] without the wraparound guard, for pairings that are exact
/// on the torus; only asks the dipole to fit in an eighth of the box.
pub fn make_periodic_molecule(spec: &MoleculeSpec, grid: Grid) -> Result<Field> {
    if 8.0 * spec.r > grid.box_length() {
        return Err(Error::Construction(format!(
            "molecule of size {} does not fit in a box of length {}",
            spec.r,
            grid.box_length()
        )));
    }
    build(spec, grid)
}

fn build(spec: &MoleculeSpec, grid: Grid) -> Result<Field> {
    if grid.dim() != spec.dim {
        return Err(Error::Shape(format!(
            "molecule of dimension {} on a {}-dimensional grid",
            spec.dim,
            grid.dim()
        )));
    }
    let shape = dipole(grid, spec);
    let mut amplitude = spec.safety * spec.height_bound();
    let target = spec.safety * spec.concentration_bound();
    for _ in 0..20 {
        let psi = shape.scale(amplitude);
        let conc = concentration_integral(&psi, spec.x0, spec.omega)?;
        if conc <= target {
            if validate_molecule(&psi, spec)?.pass {
                return Ok(psi);
            }
            amplitude *= 0.9;
        } else {
            amplitude *= target / conc * (1.0 - 1e-9);
        }
    }
    Err(Error::Construction(
        "molecular conditions still violated after 20 rescalings".into(),
    ))
}

/// Outcome of the three molecular conditions on a sampled field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MoleculeCheck {
    pub concentration: f64,
    pub concentration_bound: f64,
    pub height: f64,
    pub height_bound: f64,
    pub moment: f64,
    pub l1: f64,
    /// False for big molecules (`r >= 1`), where the moment condition is dropped.
    pub moment_checked: bool,
    pub concentration_ok: bool,
    pub height_ok: bool,
    pub moment_ok: bool,
    pub pass: bool,
}

pub fn validate_molecule(f: &Field, spec: &MoleculeSpec) -> Result<MoleculeCheck> {
    let f = f.to_physical();
    let concentration = concentration_integral(&f, spec.x0, spec.omega)?;
    let height = f.max_abs();
    let moment = f.integral();
    let l1 = f.values().iter().map(|v| v.abs()).sum::<f64>() * f.grid().cell_volume();
    let concentration_bound = spec.concentration_bound();
    let height_bound = spec.height_bound();
    let moment_checked = spec.r < 1.0;
    let concentration_ok = concentration <= concentration_bound;
    let height_ok = height <= height_bound;
    let moment_ok = !moment_checked || moment.abs() <= 1e-12 * l1;
    Ok(MoleculeCheck {
        concentration,
        concentration_bound,
        height,
        height_bound,
        moment,
        l1,
        moment_checked,
        concentration_ok,
        height_ok,
        moment_ok,
        pass: concentration_ok && height_ok && moment_ok,
    })
}

/// Mean of `v` over the grid points within periodic distance `radius` of `center`.
pub fn center_velocity(v: &[Field], center: Point, radius: f64) -> Result<Point> {
    let grid = *v
        .first()
        .ok_or_else(|| Error::Shape("velocity needs at least one component".into()))?
        .grid();
    if !(radius > 2.0 * grid.spacing()) {
        return Err(Error::Resolution(format!(
            "ball radius {radius} must exceed two grid spacings ({})",
            2.0 * grid.spacing()
        )));
    }
    let inside: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.periodic_distance(grid.point(i), center) <= radius)
        .collect();
    if inside.len() < 4 {
        return Err(Error::Resolution(format!(
            "ball of radius {radius} holds fewer than 4 cells"
        )));
    }
    let mut mean = [0.0; 2];
    for (a, c) in v.iter().enumerate() {
        let vals = c.values();
        mean[a] = inside.iter().map(|&i| vals[i]).sum::<f64>() / inside.len() as f64;
    }
    Ok(mean)
}
