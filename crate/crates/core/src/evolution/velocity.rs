use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{
    apply_multiplier, plan_for, riesz_transform, Field, Grid, Multiplier, VectorField,
};

/// SQG velocity `u = (-R2 θ, R1 θ)`.
pub fn sqg_velocity(theta: &Field) -> Result<VectorField> {
    if theta.grid().dim() != 2 {
        return Err(Error::Unsupported("SQG coupling needs dim = 2".into()));
    }
    let r2 = riesz_transform(theta, 1)?;
    let r1 = riesz_transform(theta, 0)?;
    Ok(vec![r2.scale(-1.0), r1])
}

/// Convolution with a unit-mass Gaussian of width `eps` (identity for `eps = 0`).
pub fn mollify_velocity(v: &[Field], eps: f64) -> Result<VectorField> {
    if eps == 0.0 {
        return Ok(v.to_vec());
    }
    let m = Multiplier::gaussian_mollifier(eps)?;
    v.iter().map(|c| apply_multiplier(c, &m)).collect()
}

/// Largest modewise divergence `|ξ·û(ξ)|` of a vector field.
pub fn spectral_divergence(v: &[Field]) -> Result<f64> {
    let grid = *v[0].grid();
    let plan = plan_for(&grid);
    let coeffs: Vec<_> = v.iter().map(|c| c.coefficients().into_owned()).collect();
    let mut worst = 0.0f64;
    for i in 0..grid.spectral_len() {
        let xi = plan.modes.xi[i];
        if plan.modes.on_nyquist[i] {
            continue;
        }
        let mut d = Complex64::new(0.0, 0.0);
        for (axis, c) in coeffs.iter().enumerate() {
            d += c[i] * xi[axis];
        }
        worst = worst.max(d.norm());
    }
    Ok(worst)
}

/// Time-dependent velocity accessor used by the solvers.
pub trait VelocityField: Send + Sync {
    fn grid(&self) -> Grid;

    /// Velocity components at time `t`, physical representation.
    fn velocity_at(&self, t: f64) -> Result<VectorField>;

    /// Lets the stepper skip the transport term entirely.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Time-independent prescribed velocity.
#[derive(Clone, Debug)]
pub struct SteadyVelocity {
    components: VectorField,
    zero: bool,
}

impl SteadyVelocity {
    /// Checks shapes and the divergence-free condition (modewise, tolerance 1e-10).
    pub fn new(components: VectorField) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| Error::Shape("velocity needs at least one component".into()))?
            .grid();
        if components.len() != grid.dim() {
            return Err(Error::Shape(format!(
                "velocity has {} components on a {}-dimensional grid",
                components.len(),
                grid.dim()
            )));
        }
        for c in &components {
            c.check_same_grid(&components[0])?;
        }
        let components: VectorField = components.iter().map(|c| c.to_physical()).collect();
        let scale = components.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
        let div = spectral_divergence(&components)?;
        if div > 1e-10 * (1.0 + scale * grid.max_dealiased_wavenumber()) {
            return Err(Error::Validation(format!(
                "prescribed velocity is not divergence-free (max |ξ·û| = {div:e})"
            )));
        }
        Ok(Self {
            zero: scale == 0.0,
            components,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        Self {
            components: vec![Field::zeros(grid); grid.dim()],
            zero: true,
        }
    }

    /// Shear `(U sin(2π m x2 / L), 0)`.
    pub fn shear(grid: Grid, amplitude: f64, wavenumber: u32) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Unsupported("shear flow needs dim = 2".into()));
        }
        let k = 2.0 * PI * wavenumber as f64 / grid.box_length();
        let u = Field::from_fn(grid, |x| amplitude * (k * x[1]).sin());
        Self::new(vec![u, Field::zeros(grid)])
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }
}

impl VelocityField for SteadyVelocity {
    fn grid(&self) -> Grid {
        *self.components[0].grid()
    }

    fn velocity_at(&self, _t: f64) -> Result<VectorField> {
        Ok(self.components.clone())
    }

    fn is_zero(&self) -> bool {
        self.zero
    }
}

#[derive(Clone, Debug)]
enum Frames {
    Steady(SteadyVelocity, usize),
    Velocity(Vec<VectorField>),
    /// Dealiased coefficients of θ; the velocity is its SQG image.
    Sqg(Vec<Vec<Complex64>>),
}

/// Velocity recorded every `dt` along a forward run, linearly interpolated in time.
#[derive(Clone, Debug)]
pub struct VelocityHistory {
    grid: Grid,
    dt: f64,
    frames: Frames,
}

impl VelocityHistory {
    /// History built from velocity snapshots at times `0, dt, 2dt, ...`.
    pub fn from_snapshots(dt: f64, snapshots: Vec<VectorField>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::History("history needs at least one snapshot".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!(
                "history spacing must be positive, got {dt}"
            )));
        }
        let grid = *snapshots[0][0].grid();
        for s in &snapshots {
            SteadyVelocity::new(s.clone())?;
        }
        Ok(Self {
            grid,
            dt,
            frames: Frames::Velocity(snapshots),
        })
    }

    pub(crate) fn steady(v: SteadyVelocity, dt: f64, len: usize) -> Self {
        Self {
            grid: v.grid(),
            dt,
            frames: Frames::Steady(v, len),
        }
    }

    pub(crate) fn sqg(grid: Grid, dt: f64, frames: Vec<Vec<Complex64>>) -> Self {
        Self {
            grid,
            dt,
            frames: Frames::Sqg(frames),
        }
    }

    pub(crate) fn velocity_frames(grid: Grid, dt: f64, frames: Vec<VectorField>) -> Self {
        Self {
            grid,
            dt,
            frames: Frames::Velocity(frames),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored frames.
    pub fn len(&self) -> usize {
        match &self.frames {
            Frames::Steady(_, len) => *len,
            Frames::Velocity(f) => f.len(),
            Frames::Sqg(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time of the last frame.
    pub fn t_end(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Locates `t` as `(frame, weight of next frame)`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let last = self.len() - 1;
        let pos = t / self.dt;
        if !(pos >= -1.0 && pos <= last as f64 + 1.0) {
            return Err(Error::History(format!(
                "time {t} is more than one step outside the recorded range [0, {}]",
                self.t_end()
            )));
        }
        let pos = pos.clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last);
        let frac = pos - k as f64;
        if frac < 1e-9 || k == last {
            Ok((k, 0.0))
        } else if frac > 1.0 - 1e-9 {
            Ok((k + 1, 0.0))
        } else {
            Ok((k, frac))
        }
    }
}

impl VelocityField for VelocityHistory {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn velocity_at(&self, t: f64) -> Result<VectorField> {
        let (k, w) = self.locate(t)?;
        match &self.frames {
            Frames::Steady(v, _) => v.velocity_at(t),
            Frames::Velocity(f) => {
                if w == 0.0 {
                    return Ok(f[k].clone());
                }
                f[k].iter()
                    .zip(&f[k + 1])
                    .map(|(a, b)| a.zip_map(b, |x, y| (1.0 - w) * x + w * y))
                    .collect()
            }
            Frames::Sqg(f) => {
                let coeffs: Vec<Complex64> = if w == 0.0 {
                    f[k].clone()
                } else {
                    f[k].iter()
                        .zip(&f[k + 1])
                        .map(|(a, b)| a * (1.0 - w) + b * w)
                        .collect()
                };
                Ok(sqg_from_coefficients(&self.grid, &coeffs)?
                    .into_iter()
                    .map(|v| Field::physical_unchecked(self.grid, v))
                    .collect())
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(&self.frames, Frames::Steady(v, _) if v.is_zero())
    }
}

/// Velocity of a time-reversed view: `v(t_total - s)`.
pub struct TimeReversed<'a> {
    inner: &'a dyn VelocityField,
    t_total: f64,
}

impl<'a> TimeReversed<'a> {
    pub fn new(inner: &'a dyn VelocityField, t_total: f64) -> Self {
        Self { inner, t_total }
    }
}

impl VelocityField for TimeReversed<'_> {
    fn grid(&self) -> Grid {
        self.inner.grid()
    }

    fn velocity_at(&self, s: f64) -> Result<VectorField> {
        self.inner.velocity_at(self.t_total - s)
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// SQG velocity samples from (already dealiased) coefficients of θ.
pub(crate) fn sqg_from_coefficients(grid: &Grid, coeffs: &[Complex64]) -> Result<Vec<Vec<f64>>> {
    let plan = plan_for(grid);
    let r1 = Multiplier::riesz(0)?.tabulate(grid)?;
    let r2 = Multiplier::riesz(1)?.tabulate(grid)?;
    let v1: Vec<Complex64> = coeffs.iter().zip(&r2).map(|(c, m)| -c * m).collect();
    let v2: Vec<Complex64> = coeffs.iter().zip(&r1).map(|(c, m)| c * m).collect();
    Ok(vec![plan.inverse(&v1), plan.inverse(&v2)])
}
