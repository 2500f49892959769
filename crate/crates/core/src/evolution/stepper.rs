//! Integrating-factor Runge–Kutta stepping for the transport-diffusion equation.
//!
//! With `L(ξ) = |ξ|^{2α} + ε|ξ|²` and `E = exp(-h L)`, one step of size `h` is
//! the Lawson form of Heun's method:
//!
//! ```text
//! k1 = N(u_n, t_n)
//! u* = E (u_n + h k1)
//! k2 = N(u*, t_n + h)
//! u_{n+1} = E (u_n + h/2 k1) + h/2 k2
//! ```
//!
//! The stiff dissipation is integrated exactly. The transport term uses the
//! skew-symmetric split `½(∇·(vθ) + v·∇θ)` on 2/3-truncated fields, which
//! conserves `∫θ²` exactly in the absence of dissipation and makes the forward
//! and backward-dual operators exact adjoints on the grid.

use num_complex::Complex64;
use std::sync::Arc;

use super::equation::{EquationSpec, TimeDirection, VelocitySource};
use super::velocity::{sqg_from_coefficients, TimeReversed, VelocityField, VelocityHistory};
use crate::error::{Error, Result};
use crate::spectral::{plan_for, Field, Grid, Multiplier, Representation};
use crate::tolerances::CFL_LIMIT;

/// Solution snapshot handed to observers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub theta: Field,
    pub time: f64,
    pub step_count: usize,
    pub dt: f64,
}

impl SolverState {
    pub fn new(theta: Field, dt: f64) -> Self {
        Self {
            theta,
            time: 0.0,
            step_count: 0,
            dt,
        }
    }
}

/// Receives the state after every step (and once for the initial state).
pub trait Observer {
    fn observe(&mut self, state: &SolverState);
}

impl<F: FnMut(&SolverState)> Observer for F {
    fn observe(&mut self, state: &SolverState) {
        self(state)
    }
}

enum Source<'a> {
    Zero,
    Sqg,
    Given(&'a dyn VelocityField),
}

/// Spectral transport operator `P ½(∇·(v Pθ) + v·∇(Pθ))`, `P` the 2/3 projection.
pub(crate) struct Transport {
    grid: Grid,
    plan: Arc<crate::spectral::Plan>,
    deriv: Vec<Vec<Complex64>>,
}

impl Transport {
    pub fn new(grid: Grid) -> Result<Self> {
        let deriv = (0..grid.dim())
            .map(|axis| Multiplier::derivative(axis)?.tabulate(&grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            plan: plan_for(&grid),
            deriv,
        })
    }

    pub fn project(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.iter()
            .zip(&self.plan.modes.keep)
            .map(|(z, &k)| if k { *z } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// Returns the transport term for velocity samples `v` and field coefficients `u`.
    pub fn apply(&self, v: &[Vec<f64>], u: &[Complex64]) -> Vec<Complex64> {
        let plan = &self.plan;
        let up = self.project(u);
        let theta = plan.inverse(&up);
        let mut adv = vec![0.0; self.grid.len()];
        let mut div = vec![Complex64::new(0.0, 0.0); up.len()];
        for (axis, vj) in v.iter().enumerate() {
            let d = &self.deriv[axis];
            let grad: Vec<Complex64> = up.iter().zip(d).map(|(a, b)| a * b).collect();
            let g = plan.inverse(&grad);
            adv.iter_mut()
                .zip(vj)
                .zip(&g)
                .for_each(|((a, x), y)| *a += x * y);
            let prod: Vec<f64> = vj.iter().zip(&theta).map(|(x, y)| x * y).collect();
            let ph = plan.forward(&prod);
            div.iter_mut()
                .zip(&ph)
                .zip(d)
                .for_each(|((acc, p), m)| *acc += m * p);
        }
        let adv_hat = plan.forward(&adv);
        div.iter()
            .zip(&adv_hat)
            .zip(&plan.modes.keep)
            .map(|((a, b), &k)| {
                if k {
                    0.5 * (a + b)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

/// One-step integrator bound to an equation and a velocity source.
pub struct Stepper<'a> {
    grid: Grid,
    spec: EquationSpec,
    source: Source<'a>,
    transport: Transport,
    decay: Vec<f64>,
    mollifier: Option<Vec<f64>>,
    cfl: f64,
    decay_cache: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl<'a> Stepper<'a> {
    /// `velocity` is required for a prescribed source and for the backward-dual
    /// direction; for the latter it must already be time-reversed.
    pub fn new(
        grid: Grid,
        spec: &EquationSpec,
        velocity: Option<&'a dyn VelocityField>,
    ) -> Result<Self> {
        spec.validate()?;
        let source = match (spec.time_direction, spec.velocity_source, velocity) {
            (_, _, Some(v)) if !v.grid().same_as(&grid) => {
                return Err(Error::Shape("velocity lives on a different grid".into()))
            }
            (_, _, Some(v)) if v.is_zero() => Source::Zero,
            (_, _, Some(v)) => Source::Given(v),
            (TimeDirection::Forward, VelocitySource::SqgCoupled, None) => {
                if grid.dim() != 2 {
                    return Err(Error::Unsupported("SQG coupling needs dim = 2".into()));
                }
                Source::Sqg
            }
            _ => {
                return Err(Error::Config(
                    "a velocity field is required for prescribed or backward runs".into(),
                ))
            }
        };
        let plan = plan_for(&grid);
        let decay = plan
            .modes
            .norm2
            .iter()
            .map(|&n2| n2.powf(spec.alpha) + spec.epsilon_visc * n2)
            .collect();
        let mollifier = if spec.mollify_eps > 0.0 {
            let e = spec.mollify_eps;
            Some(
                plan.modes
                    .norm2
                    .iter()
                    .map(|&n2| (-0.5 * e * e * n2).exp())
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self {
            grid,
            spec: spec.clone(),
            source,
            transport: Transport::new(grid)?,
            decay,
            mollifier,
            cfl: CFL_LIMIT,
            decay_cache: None,
        })
    }

    /// Drops the dissipation terms, leaving pure transport (test hook).
    pub fn without_dissipation(mut self) -> Self {
        self.decay.iter_mut().for_each(|d| *d = 0.0);
        self.decay_cache = None;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    /// Largest dt allowed by the CFL bound for speed `speed`.
    pub fn advisory_dt(&self, speed: f64) -> f64 {
        self.cfl / (self.grid.max_dealiased_wavenumber() * speed)
    }

    /// Velocity samples at time `t`, for the current field coefficients `u`.
    fn velocity(&self, u: &[Complex64], t: f64) -> Result<Option<Vec<Vec<f64>>>> {
        let raw = match &self.source {
            Source::Zero => return Ok(None),
            Source::Sqg => {
                let up = self.transport.project(u);
                sqg_from_coefficients(&self.grid, &up)?
            }
            Source::Given(v) => v
                .velocity_at(t)?
                .into_iter()
                .map(|f| f.into_values())
                .collect(),
        };
        Ok(Some(match &self.mollifier {
            None => raw,
            Some(m) => {
                let plan = plan_for(&self.grid);
                raw.iter()
                    .map(|c| {
                        let mut h = plan.forward(c);
                        h.iter_mut().zip(m).for_each(|(z, w)| *z *= w);
                        plan.inverse(&h)
                    })
                    .collect()
            }
        }))
    }

    /// Explicit part of the right-hand side; `None` when there is no transport.
    fn nonlinear(&self, u: &[Complex64], t: f64, dt: f64) -> Result<Option<Vec<Complex64>>> {
        let Some(v) = self.velocity(u, t)? else {
            return Ok(None);
        };
        let speed = max_speed(&v);
        if speed > 0.0 && dt * self.grid.max_dealiased_wavenumber() * speed > self.cfl {
            return Err(Error::Cfl {
                dt,
                advisory: self.advisory_dt(speed),
            });
        }
        let mut n = self.transport.apply(&v, u);
        if self.spec.time_direction == TimeDirection::Forward {
            n.iter_mut().for_each(|z| *z = -*z);
        }
        Ok(Some(n))
    }

    fn factors(&mut self, dt: f64) -> (&[f64], &[f64]) {
        let fresh = !matches!(&self.decay_cache, Some((h, _, _)) if *h == dt);
        if fresh {
            let full = self.decay.iter().map(|d| (-dt * d).exp()).collect();
            let half = self.decay.iter().map(|d| (-0.5 * dt * d).exp()).collect();
            self.decay_cache = Some((dt, full, half));
        }
        let (_, full, half) = self.decay_cache.as_ref().expect("filled above");
        (full, half)
    }

    /// Advances coefficients `u` from `t` to `t + dt`.
    pub(crate) fn advance(&mut self, u: &[Complex64], t: f64, dt: f64) -> Result<Vec<Complex64>> {
        let k1 = self.nonlinear(u, t, dt)?;
        let e = self.factors(dt).0.to_vec();
        let Some(k1) = k1 else {
            return Ok(u.iter().zip(&e).map(|(z, f)| z * f).collect());
        };
        let ustar: Vec<Complex64> = u
            .iter()
            .zip(&k1)
            .zip(&e)
            .map(|((z, k), f)| (z + k * dt) * f)
            .collect();
        let k2 = self
            .nonlinear(&ustar, t + dt, dt)?
            .expect("velocity present at stage 1");
        Ok(u.iter()
            .zip(&k1)
            .zip(&k2)
            .zip(&e)
            .map(|(((z, a), b), f)| (z + a * (0.5 * dt)) * f + b * (0.5 * dt))
            .collect())
    }

    /// One step of size `state.dt`.
    pub fn step(&mut self, state: &SolverState) -> Result<SolverState> {
        if !state.theta.grid().same_as(&self.grid) {
            return Err(Error::Shape("state lives on a different grid".into()));
        }
        let u = state.theta.coefficients();
        let next = self.advance(&u, state.time, state.dt)?;
        let step_count = state.step_count + 1;
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                time: state.time + state.dt,
                step: step_count,
                last_good: Box::new(state.clone()),
            });
        }
        Ok(SolverState {
            theta: Field::from_spectrum(self.grid, next)?,
            time: step_count as f64 * state.dt,
            step_count,
            dt: state.dt,
        })
    }
}

fn max_speed(v: &[Vec<f64>]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..v[0].len() {
        let s: f64 = v.iter().map(|c| c[i] * c[i]).sum();
        m = m.max(s);
    }
    m.sqrt()
}

/// One integrating-factor step.
pub fn etd_step(
    state: &SolverState,
    spec: &EquationSpec,
    velocity: Option<&dyn VelocityField>,
) -> Result<SolverState> {
    Stepper::new(*state.theta.grid(), spec, velocity)?.step(state)
}

/// Splits `[0, t_end]` into whole steps no larger than `dt`.
fn step_plan(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Parameter(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let n = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

fn run(
    stepper: &mut Stepper<'_>,
    theta0: &Field,
    t_end: f64,
    dt: f64,
    observers: &mut [&mut dyn Observer],
    mut record: impl FnMut(&SolverState) -> Result<()>,
) -> Result<SolverState> {
    let (steps, dt) = step_plan(t_end, dt)?;
    let mut state = SolverState::new(theta0.to_spectral(), dt);
    record(&state)?;
    for o in observers.iter_mut() {
        o.observe(&state);
    }
    for _ in 0..steps {
        state = stepper.step(&state)?;
        record(&state)?;
        for o in observers.iter_mut() {
            o.observe(&state);
        }
    }
    if theta0.representation() == Representation::Physical {
        state.theta = state.theta.to_physical();
    }
    Ok(state)
}

/// Integrates the forward equation to `t_end`. The step is shrunk so that an
/// integer number of steps lands exactly on `t_end`.
pub fn run_forward(
    theta0: &Field,
    spec: &EquationSpec,
    velocity: Option<&dyn VelocityField>,
    t_end: f64,
    dt: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<SolverState> {
    let spec = spec.clone().with_direction(TimeDirection::Forward);
    let mut stepper = Stepper::new(*theta0.grid(), &spec, velocity)?;
    run(&mut stepper, theta0, t_end, dt, observers, |_| Ok(()))
}

/// Like [`run_forward`], also recording the velocity at every step for a later
/// backward-dual run.
pub fn run_forward_recording(
    theta0: &Field,
    spec: &EquationSpec,
    velocity: Option<&dyn VelocityField>,
    t_end: f64,
    dt: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<(SolverState, VelocityHistory)> {
    let grid = *theta0.grid();
    let spec = spec.clone().with_direction(TimeDirection::Forward);
    let (_, dt_eff) = step_plan(t_end, dt)?;
    let mut stepper = Stepper::new(grid, &spec, velocity)?;
    let transport = Transport::new(grid)?;
    let mut sqg_frames = Vec::new();
    let mut vel_frames = Vec::new();
    let state = run(&mut stepper, theta0, t_end, dt, observers, |s| {
        match velocity {
            None => sqg_frames.push(transport.project(&s.theta.coefficients())),
            Some(v) if v.is_zero() => {}
            Some(v) => vel_frames.push(v.velocity_at(s.time)?),
        }
        Ok(())
    })?;
    let frames = (t_end / dt_eff).round() as usize + 1;
    let history = match velocity {
        None => VelocityHistory::sqg(grid, dt_eff, sqg_frames),
        Some(v) if v.is_zero() => {
            VelocityHistory::steady(super::velocity::SteadyVelocity::zero(grid), dt_eff, frames)
        }
        Some(_) => VelocityHistory::velocity_frames(grid, dt_eff, vel_frames),
    };
    Ok((state, history))
}

/// Integrates the backward-dual equation from `s = 0` to `s = t`, reading the
/// velocity at `t - s`.
pub fn run_backward(
    psi0: &Field,
    velocity_history: &dyn VelocityField,
    spec: &EquationSpec,
    t: f64,
    dt: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<SolverState> {
    let spec = spec.clone().with_direction(TimeDirection::BackwardDual);
    let reversed = TimeReversed::new(velocity_history, t);
    let mut stepper = Stepper::new(*psi0.grid(), &spec, Some(&reversed))?;
    run(&mut stepper, psi0, t, dt, observers, |_| Ok(()))
}
