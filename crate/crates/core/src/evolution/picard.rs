//! Fixed-point iteration on the Duhamel form of the viscous equation
//!
//! ```text
//! θ(t) = e^{εtΔ}θ0 - ∫_0^t e^{ε(t-s)Δ} [∇·(v_ε θ) + Λ^{2α}θ](s) ds
//! ```
//!
//! on `n_quad` equispaced nodes of `[0, t']`, with the trapezoidal rule in `s`
//! and exact heat factors.

use num_complex::Complex64;

use super::equation::EquationSpec;
use super::stepper::Transport;
use super::velocity::{mollify_velocity, VelocityField};
use crate::error::{Error, Result};
use crate::spectral::{plan_for, Field, Grid};

#[derive(Clone, Debug)]
pub struct PicardOptions {
    /// Constant `C` in the admissible-time bound.
    pub constant_c: f64,
    /// Stop once successive iterates differ by less than this (sup in time of the L² norm).
    pub tolerance: f64,
    /// Refuse `t'` that violates the bound.
    pub enforce_bound: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            constant_c: 1.0,
            tolerance: 1e-10,
            enforce_bound: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    /// Iterate at `t'`.
    pub solution: Field,
    /// `sup_t ‖θ_{n+1}(t) - θ_n(t)‖₂` for each iteration.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub ratios: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Value of `C(√(t'/ε)‖v‖∞ + t'^{1-α}/ε^α)` for the run.
    pub bound: f64,
}

/// `C (√(t'/ε) v_max + t'^{1-α} / ε^α)`.
pub fn contraction_bound(t_prime: f64, epsilon_visc: f64, alpha: f64, v_max: f64, c: f64) -> f64 {
    c * ((t_prime / epsilon_visc).sqrt() * v_max
        + t_prime.powf(1.0 - alpha) / epsilon_visc.powf(alpha))
}

/// Largest `t'` with `contraction_bound(t') <= 1/2`.
pub fn admissible_time(epsilon_visc: f64, alpha: f64, v_max: f64, c: f64) -> f64 {
    let f = |t: f64| contraction_bound(t, epsilon_visc, alpha, v_max, c) - 0.5;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn picard_solve(
    theta0: &Field,
    v: &dyn VelocityField,
    spec: &EquationSpec,
    t_prime: f64,
    n_quad: usize,
    max_iter: usize,
) -> Result<PicardReport> {
    picard_solve_with(
        theta0,
        v,
        spec,
        t_prime,
        n_quad,
        max_iter,
        &PicardOptions::default(),
    )
}

fn l2(grid: &Grid, weights: &[f64], a: &[Complex64], b: &[Complex64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y).norm_sqr())
        .sum();
    (s * grid.volume()).sqrt()
}

pub fn picard_solve_with(
    theta0: &Field,
    v: &dyn VelocityField,
    spec: &EquationSpec,
    t_prime: f64,
    n_quad: usize,
    max_iter: usize,
    options: &PicardOptions,
) -> Result<PicardReport> {
    spec.validate()?;
    let grid = *theta0.grid();
    if !(spec.epsilon_visc > 0.0) {
        return Err(Error::Parameter(
            "the Picard scheme needs epsilon_visc > 0".into(),
        ));
    }
    if !(t_prime > 0.0) {
        return Err(Error::Parameter(format!(
            "t' must be positive, got {t_prime}"
        )));
    }
    if n_quad < 2 {
        return Err(Error::Parameter(format!(
            "n_quad must be at least 2, got {n_quad}"
        )));
    }
    if !v.grid().same_as(&grid) {
        return Err(Error::Shape("velocity lives on a different grid".into()));
    }
    let h = t_prime / (n_quad - 1) as f64;
    let nodes: Vec<f64> = (0..n_quad).map(|j| j as f64 * h).collect();

    let mut v_max = 0.0f64;
    let mut velocities = Vec::with_capacity(n_quad);
    for &s in &nodes {
        let raw = v.velocity_at(s)?;
        for i in 0..grid.len() {
            let sp: f64 = raw.iter().map(|c| c.values()[i].powi(2)).sum();
            v_max = v_max.max(sp.sqrt());
        }
        let smooth = mollify_velocity(&raw, spec.mollify_eps)?;
        velocities.push(
            smooth
                .into_iter()
                .map(|f| f.into_values())
                .collect::<Vec<_>>(),
        );
    }
    let bound = contraction_bound(
        t_prime,
        spec.epsilon_visc,
        spec.alpha,
        v_max,
        options.constant_c,
    );
    if options.enforce_bound && bound > 0.5 {
        return Err(Error::Parameter(format!(
            "t' = {t_prime} violates the contraction bound ({bound:.4} > 1/2); largest admissible t' is {:.6e}",
            admissible_time(spec.epsilon_visc, spec.alpha, v_max, options.constant_c)
        )));
    }

    let plan = plan_for(&grid);
    let modes = &plan.modes;
    let transport = Transport::new(grid)?;
    let heat: Vec<Vec<f64>> = (0..n_quad)
        .map(|m| {
            let tau = m as f64 * h;
            modes
                .norm2
                .iter()
                .map(|n2| (-spec.epsilon_visc * tau * n2).exp())
                .collect()
        })
        .collect();
    let lambda: Vec<f64> = modes.norm2.iter().map(|n2| n2.powf(spec.alpha)).collect();
    let u0 = theta0.coefficients().into_owned();
    let base: Vec<Vec<Complex64>> = heat
        .iter()
        .map(|e| u0.iter().zip(e).map(|(z, f)| z * f).collect())
        .collect();

    let mut current: Vec<Vec<Complex64>> = vec![u0.clone(); n_quad];
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    let mut rising = 0;
    for _ in 0..max_iter {
        let forcing: Vec<Vec<Complex64>> = current
            .iter()
            .zip(&velocities)
            .map(|(u, vel)| {
                let mut f = transport.apply(vel, u);
                f.iter_mut()
                    .zip(u)
                    .zip(&lambda)
                    .for_each(|((a, z), l)| *a += z * l);
                f
            })
            .collect();
        let mut next = Vec::with_capacity(n_quad);
        for i in 0..n_quad {
            let mut u = base[i].clone();
            for j in 0..=i {
                if i == 0 {
                    break;
                }
                let w = if j == 0 || j == i { 0.5 * h } else { h };
                let e = &heat[i - j];
                for ((acc, f), ek) in u.iter_mut().zip(&forcing[j]).zip(e) {
                    *acc -= f * (w * ek);
                }
            }
            next.push(u);
        }
        let inc = next
            .iter()
            .zip(&current)
            .map(|(a, b)| l2(&grid, &modes.weight, a, b))
            .fold(0.0, f64::max);
        if let Some(prev) = increments.last() {
            let r = if *prev > 0.0 { inc / prev } else { 0.0 };
            ratios.push(r);
            rising = if r > 1.0 { rising + 1 } else { 0 };
        }
        increments.push(inc);
        current = next;
        if rising >= 3 {
            return Err(Error::Divergence(ratios));
        }
        if inc < options.tolerance {
            converged = true;
            break;
        }
    }
    let solution = Field::from_spectrum(grid, current.pop().expect("n_quad >= 2"))?.to_physical();
    Ok(PicardReport {
        solution,
        iterations: increments.len(),
        increments,
        ratios,
        converged,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::velocity::SteadyVelocity;
    use std::f64::consts::PI;

    #[test]
    fn bound_inversion() {
        let t = admissible_time(0.1, 0.25, 1.0, 1.0);
        assert!((contraction_bound(t, 0.1, 0.25, 1.0, 1.0) - 0.5).abs() < 1e-12);
        assert!(t > 0.017 && t < 0.0175);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let v = SteadyVelocity::shear(g, 1.0, 1).unwrap();
        let spec = EquationSpec::prescribed(0.25)
            .with_viscosity(0.1)
            .with_mollifier(0.1);
        let r = picard_solve(&Field::zeros(g), &v, &spec, 0.01, 8, 40).unwrap();
        assert!(r.converged);
        assert_eq!(r.solution.max_abs(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let v = SteadyVelocity::shear(g, 1.0, 1).unwrap();
        let theta = Field::from_fn(g, |x| x[0].sin());
        let inviscid = EquationSpec::prescribed(0.25);
        assert!(picard_solve(&theta, &v, &inviscid, 0.01, 8, 10).is_err());
        let spec = inviscid.with_viscosity(0.1);
        assert!(matches!(
            picard_solve(&theta, &v, &spec, 0.5, 8, 10),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn contracts_on_shear_flow() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        let v = SteadyVelocity::shear(g, 1.0, 1).unwrap();
        let spec = EquationSpec::prescribed(0.25)
            .with_viscosity(0.1)
            .with_mollifier(0.1);
        let theta = Field::from_fn(g, |x| x[0].sin() + 0.5 * (x[0] + 2.0 * x[1]).cos());
        let t = admissible_time(0.1, 0.25, 1.0, 1.0);
        let r = picard_solve(&theta, &v, &spec, t, 12, 40).unwrap();
        assert!(r.converged);
        assert!(r.ratios.iter().all(|&q| q <= 0.5), "{:?}", r.ratios);
    }
}
