//! Target functions `G_N`, the time schedule, and the backward-evolution ledger.

use serde::{Deserialize, Serialize};

use super::spec::{
    center_velocity, concentration_integral, make_molecule, unit_ball_volume, MoleculeSpec,
};
use crate::analysis::bmo_norm;
use crate::error::{Error, Result};
use crate::evolution::{EquationSpec, Stepper, TimeDirection, VelocityField};
use crate::spectral::{plan_for, Grid, Point};

/// Ledger parameters. `k` and `c0` are only used by [`MoleculeLedger::target_g`];
/// the experiment measures its own values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LedgerParams {
    pub k: f64,
    pub c0: f64,
    /// Time fraction: `s0 = eta r`, `s_k = eta r²`.
    pub eta: f64,
    pub delta_stop: f64,
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self {
            k: 1.0,
            c0: 0.5,
            eta: 0.1,
            delta_stop: 0.05,
        }
    }
}

impl LedgerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Parameter(format!(
                "K must be positive, got {}",
                self.k
            )));
        }
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return Err(Error::Parameter(format!(
                "c0 must lie in (0, 1), got {}",
                self.c0
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Parameter(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if !(self.delta_stop > 0.0 && self.delta_stop.is_finite()) {
            return Err(Error::Parameter(format!(
                "delta_stop must be positive, got {}",
                self.delta_stop
            )));
        }
        Ok(())
    }
}

/// Checkpoint durations `s0, s1, ..., s_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub stop_index: usize,
}

impl Schedule {
    pub fn total(&self) -> f64 {
        self.times.iter().sum()
    }
}

/// `s0 = eta r`, `s_k = eta r²`, `N = ceil((delta - eta r) / (eta r²))`.
pub fn iteration_schedule(spec: &MoleculeSpec, params: &LedgerParams) -> Result<Schedule> {
    params.validate()?;
    let s0 = params.eta * spec.r;
    let s1 = params.eta * spec.r * spec.r;
    let n = ((params.delta_stop - s0) / s1 - 1e-9).ceil().max(0.0) as usize;
    let mut times = vec![s0];
    times.extend(std::iter::repeat_n(s1, n));
    Ok(Schedule {
        times,
        stop_index: n,
    })
}

/// Value of a target function, or the signal that it has reached 1 and the
/// maximum principle takes over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Value(f64),
    MaximumPrinciple(f64),
}

impl Target {
    fn new(g: f64) -> Self {
        if g >= 1.0 {
            Target::MaximumPrinciple(g)
        } else {
            Target::Value(g)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Target::Value(g) | Target::MaximumPrinciple(g) => g,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoleculeLedger {
    pub k: f64,
    pub c0: f64,
    pub delta_stop: f64,
    pub eta: f64,
    pub r: f64,
    pub dim: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
    /// `s0, s1, ...` recorded so far.
    pub times: Vec<f64>,
    pub centers: Vec<Point>,
    pub g_values: Vec<f64>,
    pub f_values: Vec<f64>,
}

impl MoleculeLedger {
    pub fn new(spec: &MoleculeSpec, alpha: f64, params: &LedgerParams) -> Result<Self> {
        params.validate()?;
        spec.validate(alpha)?;
        Ok(Self {
            k: params.k,
            c0: params.c0,
            delta_stop: params.delta_stop,
            eta: params.eta,
            r: spec.r,
            dim: spec.dim,
            alpha,
            gamma: spec.gamma,
            omega: spec.omega,
            times: Vec::new(),
            centers: Vec::new(),
            g_values: Vec::new(),
            f_values: Vec::new(),
        })
    }

    /// `2α(n+γ)/(n+ω)`.
    pub fn beta(&self) -> f64 {
        let n = self.dim as f64;
        2.0 * self.alpha * (n + self.gamma) / (n + self.omega)
    }

    /// `r^β + c0 · sum_s`.
    fn base(&self, sum_s: f64) -> f64 {
        self.r.powf(self.beta()) + self.c0 * sum_s
    }

    /// `f(r, s) = (r^β + c0 · sum_s)^{1/(2α)}`.
    pub fn f_of(&self, sum_s: f64) -> f64 {
        self.base(sum_s).powf(0.5 / self.alpha)
    }

    /// Height bound `(r^β + c0 · sum_s)^{-(n+ω)/(2α)}`.
    pub fn linf_bound(&self, sum_s: f64) -> f64 {
        self.base(sum_s)
            .powf(-(self.dim as f64 + self.omega) / (2.0 * self.alpha))
    }

    /// L¹ bound `v_n (r^β + c0 · sum_s)^{-ω/(2α)}`.
    pub fn l1_bound(&self, sum_s: f64) -> f64 {
        unit_ball_volume(self.dim) * self.base(sum_s).powf(-self.omega / (2.0 * self.alpha))
    }

    /// `G_N` with `s_N = s`, using the recorded `s0, ..., s_{N-1}`.
    pub fn target_g(&self, n: usize, s: f64) -> Result<Target> {
        if self.times.len() < n {
            return Err(Error::Parameter(format!(
                "G_{n} needs {n} recorded times, only {} present",
                self.times.len()
            )));
        }
        let mut durations = self.times[..n].to_vec();
        durations.push(s);
        let g = g_sequence(self, self.k, &durations);
        Ok(Target::new(*g.last().expect("at least one duration")))
    }

    /// Appends a checkpoint of duration `s` reached at `center`.
    pub fn record(&mut self, s: f64, center: Point) -> Result<Target> {
        let n = self.times.len();
        let g = self.target_g(n, s)?;
        let sum: f64 = self.times.iter().sum();
        self.f_values
            .push(if n == 0 { self.r } else { self.f_of(sum) });
        self.times.push(s);
        self.centers.push(center);
        self.g_values.push(g.value());
        Ok(g)
    }
}

/// `G_0, ..., G_N` for durations `s0..s_N`:
/// `G_0 = r + K s0`, `G_N = G_{N-1} + G_{N-1}^{1+γ-ω} K s_N / f(r, s0..s_{N-1})`.
fn g_sequence(ledger: &MoleculeLedger, k: f64, durations: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(durations.len());
    let mut sum = 0.0;
    let mut g = 0.0;
    for (i, &s) in durations.iter().enumerate() {
        g = if i == 0 {
            ledger.r + k * s
        } else {
            g + g.powf(1.0 + ledger.gamma - ledger.omega) * k * s / ledger.f_of(sum)
        };
        sum += s;
        out.push(g);
    }
    out
}

/// One ledger line; the column order is the CSV layout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerRow {
    pub step: usize,
    pub s_k: f64,
    pub sum_s: f64,
    #[serde(rename = "G_N")]
    pub g_n: f64,
    pub f: f64,
    pub conc: f64,
    pub conc_bound: f64,
    pub linf: f64,
    pub linf_bound: f64,
    pub l1: f64,
    pub l1_bound: f64,
    #[serde(rename = "Kmin")]
    pub k_min: f64,
    pub c0max: f64,
}

/// Outcome of one backward molecule run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerReport {
    pub r: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
    /// Measured bmo norm of the velocity.
    pub mu: f64,
    /// Smallest `K` passing every active concentration check (`None` if none below 1e12).
    pub k_min: Option<f64>,
    /// Largest `c0 <= 1` passing every height and L¹ check.
    pub c0max: f64,
    /// `min(0.5, c0max / 2)`, used for the target functions.
    pub c0: f64,
    pub rows: Vec<LedgerRow>,
    /// Checkpoints where the concentration check is active (`f < 1` and `G_N < 1`).
    pub active_checks: usize,
    pub concentration_ok: bool,
    pub height_ok: bool,
    pub l1_ok: bool,
    /// `‖ψ‖₁ <= v_n (c0 δ)^{-ω/(2α)}` at the last checkpoint.
    pub final_l1: f64,
    pub final_l1_bound: f64,
    pub final_l1_ok: bool,
    /// Largest `‖ψ(s)‖₁ / ‖ψ0‖₁` over all steps.
    pub l1_growth: f64,
    /// Relative spread of the discrete `‖ψ0‖₁` over subgrid shifts of the
    /// molecule: the resolution of the L¹ monitor.
    pub l1_quadrature_spread: f64,
    /// Largest fraction of the L¹ mass farther than `0.45 L` from the center.
    pub wraparound: f64,
    pub centers: Vec<Point>,
}

impl LedgerReport {
    pub fn pass(&self) -> bool {
        self.k_min.is_some()
            && self.c0 > 0.0
            && self.concentration_ok
            && self.height_ok
            && self.l1_ok
            && self.final_l1_ok
            && self.l1_growth <= 1.0 + self.l1_quadrature_spread
    }
}

struct Checkpoint {
    s: f64,
    sum: f64,
    conc: f64,
    linf: f64,
    l1: f64,
}

/// Backward run from the molecule; fills `conc` only when `centers` is given.
#[allow(clippy::too_many_arguments)]
fn backward_pass(
    grid: Grid,
    spec: &MoleculeSpec,
    velocity: &dyn VelocityField,
    alpha: f64,
    dt: f64,
    durations: &[f64],
    radii: Option<&[f64]>,
    growth: &mut f64,
    wrap: &mut f64,
) -> Result<(Vec<Checkpoint>, Vec<Point>)> {
    let eq = EquationSpec::prescribed(alpha).with_direction(TimeDirection::BackwardDual);
    let mut stepper = Stepper::new(grid, &eq, Some(velocity))?;
    let plan = plan_for(&grid);
    let psi0 = make_molecule(spec, grid)?;
    let cell = grid.cell_volume();
    let l1_of = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>() * cell;
    let l1_0 = l1_of(&psi0.values());
    let mut u = psi0.coefficients().into_owned();
    let mut center = spec.x0;
    let mut centers = vec![center];
    let mut out = Vec::with_capacity(durations.len());
    let mut s_now = 0.0;
    for (k, &s_k) in durations.iter().enumerate() {
        let subs = ((s_k / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = s_k / subs as f64;
        for _ in 0..subs {
            if let Some(radii) = radii {
                if !velocity.is_zero() {
                    // ψ is carried by -v(t - s); its center follows the same field.
                    let w = center_velocity(&velocity.velocity_at(s_now)?, center, radii[k])?;
                    for a in 0..grid.dim() {
                        center[a] -= h * w[a];
                    }
                }
            }
            u = stepper.advance(&u, s_now, h)?;
            s_now += h;
            if radii.is_none() {
                let l1 = l1_of(&plan.inverse(&u));
                *growth = growth.max(l1 / l1_0);
            }
        }
        let values = plan.inverse(&u);
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite molecule at s = {s_now}"
            )));
        }
        let linf = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let l1 = l1_of(&values);
        let field = crate::spectral::Field::from_values(grid, values)?;
        let conc = match radii {
            Some(_) => concentration_integral(&field, center, spec.omega)?,
            None => {
                let far = 0.45 * grid.box_length();
                let outside: f64 = field
                    .values()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| grid.periodic_distance(grid.point(*i), center) >= far)
                    .map(|(_, x)| x.abs())
                    .sum::<f64>()
                    * cell;
                *wrap = wrap.max(if l1 > 0.0 { outside / l1 } else { 0.0 });
                if velocity.is_zero() {
                    concentration_integral(&field, center, spec.omega)?
                } else {
                    f64::NAN
                }
            }
        };
        centers.push(center);
        out.push(Checkpoint {
            s: s_k,
            sum: s_now,
            conc,
            linf,
            l1,
        });
    }
    Ok((out, centers))
}

/// Relative spread of the discrete L¹ norm of the molecule over a 4×4 set of
/// subgrid shifts of its center.
fn quadrature_spread(spec: &MoleculeSpec, grid: Grid) -> Result<f64> {
    let dx = grid.spacing();
    let mut norms = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let mut shifted = spec.clone();
            shifted.x0[0] += i as f64 * dx / 4.0;
            if grid.dim() == 2 {
                shifted.x0[1] += j as f64 * dx / 4.0;
            }
            let psi = super::spec::dipole(grid, &shifted);
            norms.push(psi.values().iter().map(|x| x.abs()).sum::<f64>());
            if grid.dim() == 1 {
                break;
            }
        }
    }
    let max = norms.iter().cloned().fold(f64::MIN, f64::max);
    let min = norms.iter().cloned().fold(f64::MAX, f64::min);
    Ok((max - min) / min)
}

/// Largest `c0 ∈ [0, 1]` passing every height and L¹ check.
fn largest_c0(ledger: &MoleculeLedger, checks: &[Checkpoint]) -> f64 {
    let pass = |c0: f64| {
        let l = MoleculeLedger {
            c0,
            ..ledger.clone()
        };
        checks
            .iter()
            .all(|c| c.linf <= l.linf_bound(c.sum) && c.l1 <= l.l1_bound(c.sum))
    };
    if pass(1.0) {
        return 1.0;
    }
    if !pass(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Active checkpoints and concentration verdict for a given `K`.
fn concentration_pass(ledger: &MoleculeLedger, k: f64, checks: &[Checkpoint]) -> (bool, usize) {
    let durations: Vec<f64> = checks.iter().map(|c| c.s).collect();
    let g = g_sequence(ledger, k, &durations);
    let mut active = 0;
    for (i, c) in checks.iter().enumerate() {
        let f = if i == 0 {
            ledger.r
        } else {
            ledger.f_of(checks[i - 1].sum)
        };
        if f >= 1.0 || g[i] >= 1.0 {
            break;
        }
        active += 1;
        if c.conc > g[i].powf(ledger.omega - ledger.gamma) {
            return (false, active);
        }
    }
    (true, active)
}

/// Smallest `K` (to 1e-2 relative) passing every active concentration check.
fn smallest_k(ledger: &MoleculeLedger, checks: &[Checkpoint]) -> Option<f64> {
    let pass = |k: f64| concentration_pass(ledger, k, checks).0;
    if pass(0.0) {
        return Some(0.0);
    }
    let mut hi = 1e-3;
    while !pass(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-2 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Evolves the molecule of `spec` backward under `velocity` (given in backward
/// time `s`) and certifies the concentration, height and L¹ ledger.
///
/// Two passes: the first measures heights and L¹ norms and fixes `c0`, the
/// second transports the center with ball radii `r, f_1, f_2, ...` and measures
/// the concentration; `K` is then bisected on the recorded values.
pub fn run_molecule_experiment(
    spec: &MoleculeSpec,
    grid: Grid,
    velocity: &dyn VelocityField,
    alpha: f64,
    dt: f64,
    params: &LedgerParams,
) -> Result<LedgerReport> {
    spec.validate(alpha)?;
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let schedule = iteration_schedule(spec, params)?;
    let mut durations = schedule.times.clone();
    // The stopping rule asks for a total strictly beyond delta.
    if schedule.total() <= params.delta_stop * (1.0 + 1e-12) {
        durations.push(*durations.last().expect("s0 present"));
    }
    let v0 = velocity.velocity_at(0.0)?;
    let mu = v0.iter().map(|c| bmo_norm(c).value()).fold(0.0, f64::max);

    let (mut growth, mut wrap) = (0.0f64, 0.0f64);
    let (first, fixed_centers) = backward_pass(
        grid,
        spec,
        velocity,
        alpha,
        dt,
        &durations,
        None,
        &mut growth,
        &mut wrap,
    )?;
    let mut ledger = MoleculeLedger::new(spec, alpha, params)?;
    let c0max = largest_c0(&ledger, &first);
    let c0 = (0.5f64).min(0.5 * c0max);
    ledger.c0 = c0;
    if c0 <= 0.0 {
        return Err(Error::Validation(
            "no positive c0 satisfies the height and L¹ bounds".into(),
        ));
    }

    let mut radii = vec![spec.r];
    let mut sum = 0.0;
    for &s in &durations[..durations.len() - 1] {
        sum += s;
        radii.push(ledger.f_of(sum));
    }
    // Without transport the center never moves and the first pass already has
    // the concentration.
    let (checks, centers) = if velocity.is_zero() {
        (first, fixed_centers)
    } else {
        let (second, centers) = backward_pass(
            grid,
            spec,
            velocity,
            alpha,
            dt,
            &durations,
            Some(&radii),
            &mut 0.0,
            &mut 0.0,
        )?;
        let checks = first
            .iter()
            .zip(&second)
            .map(|(a, b)| Checkpoint { conc: b.conc, ..*a })
            .collect::<Vec<_>>();
        (checks, centers)
    };
    let k_min = smallest_k(&ledger, &checks);
    let k = k_min.unwrap_or(f64::INFINITY);
    let (concentration_ok, active_checks) = concentration_pass(&ledger, k, &checks);
    let g = g_sequence(&ledger, k, &durations);

    let mut rows = Vec::with_capacity(checks.len());
    for (i, c) in checks.iter().enumerate() {
        ledger.record(c.s, centers[i + 1])?;
        rows.push(LedgerRow {
            step: i,
            s_k: c.s,
            sum_s: c.sum,
            g_n: g[i],
            f: radii[i],
            conc: c.conc,
            conc_bound: g[i].powf(spec.omega - spec.gamma),
            linf: c.linf,
            linf_bound: ledger.linf_bound(c.sum),
            l1: c.l1,
            l1_bound: ledger.l1_bound(c.sum),
            k_min: k,
            c0max,
        });
    }
    let height_ok = rows.iter().all(|r| r.linf <= r.linf_bound);
    let l1_ok = rows.iter().all(|r| r.l1 <= r.l1_bound);
    let last = checks.last().expect("nonempty schedule");
    let final_l1_bound =
        unit_ball_volume(spec.dim) * (c0 * params.delta_stop).powf(-spec.omega / (2.0 * alpha));
    Ok(LedgerReport {
        r: spec.r,
        alpha,
        gamma: spec.gamma,
        omega: spec.omega,
        mu,
        k_min,
        c0max,
        c0,
        active_checks,
        concentration_ok,
        height_ok,
        l1_ok,
        final_l1: last.l1,
        final_l1_bound,
        final_l1_ok: last.sum > params.delta_stop && last.l1 <= final_l1_bound,
        l1_growth: growth,
        l1_quadrature_spread: quadrature_spread(spec, grid)?,
        wraparound: wrap,
        centers,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::SteadyVelocity;

    fn spec(r: f64) -> MoleculeSpec {
        MoleculeSpec::new(2, r, [0.0, 0.0], 0.9, 0.4, 0.25).unwrap()
    }

    fn ledger(r: f64, k: f64) -> MoleculeLedger {
        let p = LedgerParams {
            k,
            ..Default::default()
        };
        MoleculeLedger::new(&spec(r), 0.25, &p).unwrap()
    }

    #[test]
    fn target_examples() {
        let l = ledger(0.1, 5.0);
        assert!((l.target_g(0, 0.01).unwrap().value() - 0.15).abs() < 1e-15);
        let mut l = ledger(0.1, 5.0);
        let g0 = l.record(0.01, [0.0; 2]).unwrap().value();
        assert_eq!(l.target_g(1, 0.0).unwrap().value(), g0);
        let mut l = ledger(0.1, 5.0);
        for n in 0..6 {
            assert_eq!(l.record(0.0, [0.0; 2]).unwrap().value(), 0.1, "N = {n}");
        }
        assert!(matches!(
            ledger(0.1, 200.0).target_g(0, 0.01).unwrap(),
            Target::MaximumPrinciple(_)
        ));
        assert!(ledger(0.1, 5.0).target_g(2, 0.01).is_err());
    }

    #[test]
    fn first_step_matches_closed_form() {
        let mut l = ledger(0.1, 5.0);
        let (s0, s1) = (0.01, 0.001);
        l.record(s0, [0.0; 2]).unwrap();
        let g1 = l.target_g(1, s1).unwrap().value();
        let g0 = 0.1 + 5.0 * s0;
        let beta = 0.5 * (2.0 + l.gamma) / 2.4;
        let f = (0.1f64.powf(beta) + 0.5 * s0).powf(2.0);
        let expected = g0 + g0.powf(1.0 + l.gamma - 0.4) / f * 5.0 * s1;
        assert!((g1 - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn g_and_f_increase() {
        let mut l = ledger(0.05, 3.0);
        let mut prev = (0.0, 0.0);
        for s in [0.005, 2.5e-4, 2.5e-4, 2.5e-4] {
            l.record(s, [0.0; 2]).unwrap();
            let g = *l.g_values.last().unwrap();
            let f = *l.f_values.last().unwrap();
            assert!(g > prev.0 && f >= prev.1);
            prev = (g, f);
        }
        assert!((l.f_of(0.0) - 0.05f64.powf(l.beta() * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn schedule_examples() {
        let p = LedgerParams::default();
        let s = iteration_schedule(&spec(0.1), &p).unwrap();
        assert_eq!(s.stop_index, 40);
        assert!((s.times[0] - 0.01).abs() < 1e-15 && (s.times[1] - 0.001).abs() < 1e-15);
        assert!(s.total() - p.delta_stop < s.times[1] + 1e-12);
        let s = iteration_schedule(&spec(0.9), &p).unwrap();
        assert_eq!(s.stop_index, 0);
        let s = iteration_schedule(&spec(0.03), &p).unwrap();
        assert!(s.total() >= p.delta_stop && s.total() - p.delta_stop < s.times[1]);
    }

    #[test]
    fn pure_dissipation_ledger_passes() {
        let s = MoleculeSpec::new(2, 0.1, [2.0, 2.0], 0.9, 0.4, 0.25).unwrap();
        let g = Grid::square(256, 4.0).unwrap();
        let v = SteadyVelocity::zero(g);
        let rep = run_molecule_experiment(&s, g, &v, 0.25, 1e-3, &LedgerParams::default()).unwrap();
        assert!(
            rep.pass(),
            "{:?}",
            (rep.k_min, rep.c0, rep.concentration_ok, rep.final_l1_ok)
        );
        assert!(rep.k_min.unwrap() <= 1e2 && rep.c0 >= 1e-3);
        assert!(rep.rows.last().unwrap().sum_s > 0.05);
        assert_eq!(rep.mu, 0.0);
    }
}
