use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{fractional_laplacian, plan_for, Field, Grid};

/// Shifts up to this many cells (in max-norm) are always taken in full.
const FULL_SHIFT_CELLS: usize = 32;
/// Grids at or below this size use the full shift lattice.
const FULL_SHIFT_GRID: usize = 128;

/// `(∫|f|^p)^{1/p}`; `p = ∞` gives the grid maximum of `|f|`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("L^p norms need p >= 1, got {p}")));
    }
    let v = f.values();
    if p.is_infinite() {
        return Ok(v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    let s: f64 = v.iter().map(|x| pow_abs(*x, p)).sum();
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

pub fn linf_norm(f: &Field) -> f64 {
    f.max_abs()
}

/// Exact grid minimum and maximum.
pub fn range_monitor(f: &Field) -> (f64, f64) {
    f.values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p.fract() == 0.0 && p < 64.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// A grid shift `(j, k)` in cells with its quadrature multiplicity.
#[derive(Clone, Copy, Debug)]
struct Shift {
    j: isize,
    k: isize,
    weight: f64,
}

fn stride_for(n: usize, extent: usize) -> usize {
    if n <= FULL_SHIFT_GRID || extent <= FULL_SHIFT_CELLS {
        1
    } else {
        (extent.div_ceil(FULL_SHIFT_CELLS)).next_power_of_two()
    }
}

/// Representatives of `{h, -h}` pairs with `0 < |h| <= radius_cells` cells.
/// On grids above 128 points, shifts beyond 32 cells are thinned to a stride
/// that doubles with each dyadic annulus and weighted accordingly.
fn shift_set(grid: &Grid, radius_cells: f64) -> Vec<Shift> {
    let n = grid.points_per_axis() as isize;
    let half = n / 2;
    let r2 = radius_cells * radius_cells;
    let mut out = Vec::new();
    let dim = grid.dim();
    let k_range: Vec<isize> = if dim == 1 {
        vec![0]
    } else {
        (-half + 1..=half).collect()
    };
    for j in 0..=half {
        for &k in &k_range {
            if j == 0 && k <= 0 {
                continue;
            }
            let d2 = (j * j + k * k) as f64;
            if d2 > r2 {
                continue;
            }
            let extent = j.unsigned_abs().max(k.unsigned_abs());
            let s = stride_for(n as usize, extent) as isize;
            if j % s != 0 || k % s != 0 {
                continue;
            }
            let self_paired = (j == 0 || j == half) && (k == 0 || k == half);
            let pair = if self_paired { 1.0 } else { 2.0 };
            out.push(Shift {
                j,
                k,
                weight: pair * (s as f64).powi(dim as i32),
            });
        }
    }
    out
}

/// Applies `g` to every pair `(f(x + h), f(x))` and sums in a fixed order.
fn shifted_reduce(
    grid: &Grid,
    v: &[f64],
    sh: Shift,
    g: impl Fn(f64) -> f64,
    combine: impl Fn(f64, f64) -> f64,
    init: f64,
) -> f64 {
    let n = grid.points_per_axis();
    let j = sh.j.rem_euclid(n as isize) as usize;
    let k = sh.k.rem_euclid(n as isize) as usize;
    let mut acc = init;
    if grid.dim() == 1 {
        for i in 0..n {
            acc = combine(acc, g(v[(i + j) % n] - v[i]));
        }
        return acc;
    }
    for i0 in 0..n {
        let a = &v[((i0 + j) % n) * n..((i0 + j) % n) * n + n];
        let b = &v[i0 * n..i0 * n + n];
        for i1 in 0..n - k {
            acc = combine(acc, g(a[i1 + k] - b[i1]));
        }
        for i1 in n - k..n {
            acc = combine(acc, g(a[i1 + k - n] - b[i1]));
        }
    }
    acc
}

/// `max_h ‖f(· + h) - f‖∞ / |h|^γ` over periodic grid shifts with `0 < |h| <= L/4`.
pub fn holder_seminorm(f: &Field, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "Hölder exponent must lie in (0, 1], got {gamma}"
        )));
    }
    let grid = *f.grid();
    let v = f.values();
    let dx = grid.spacing();
    let shifts = shift_set(&grid, grid.points_per_axis() as f64 / 4.0);
    let best = shifts
        .par_iter()
        .map(|sh| {
            let m = shifted_reduce(&grid, &v, *sh, f64::abs, f64::max, 0.0);
            let h = dx * ((sh.j * sh.j + sh.k * sh.k) as f64).sqrt();
            m / h.powf(gamma)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Difference-quotient Besov seminorm
/// `(Σ_h ‖f(· + h) - f‖_p^p / |h|^{n + s p} · cellvol)^{1/p}` over periodic shifts `|h| <= L/2`.
pub fn besov_seminorm(f: &Field, s: f64, p: f64) -> Result<f64> {
    Ok(besov_seminorm_pow(f, s, p)?.powf(1.0 / p))
}

/// The p-th power of [`besov_seminorm`].
pub fn besov_seminorm_pow(f: &Field, s: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!(
            "Besov integrability must be finite and >= 1, got {p}"
        )));
    }
    let sp = s * p;
    if !(s > 0.0 && sp > 0.0 && sp < 2.0) {
        return Err(Error::Parameter(format!(
            "Besov smoothness needs s > 0 and s p in (0, 2), got s = {s}, p = {p}"
        )));
    }
    let grid = *f.grid();
    let v = f.values();
    let dx = grid.spacing();
    let cell = grid.cell_volume();
    let n = grid.dim() as f64;
    let shifts = shift_set(&grid, grid.points_per_axis() as f64 / 2.0);
    let parts: Vec<f64> = shifts
        .par_iter()
        .map(|sh| {
            let sum = shifted_reduce(&grid, &v, *sh, |d| pow_abs(d, p), |a, b| a + b, 0.0);
            let h = dx * ((sh.j * sh.j + sh.k * sh.k) as f64).sqrt();
            sh.weight * sum * cell * cell / h.powf(n + sp)
        })
        .collect();
    Ok(parts.iter().sum())
}

/// `⟨f, Λ^{2α} f⟩ = L^n Σ_ξ |ξ|^{2α} |f̂(ξ)|²`.
pub fn sobolev_alpha_energy(f: &Field, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let grid = *f.grid();
    let plan = plan_for(&grid);
    let c = f.coefficients();
    let s: f64 = c
        .iter()
        .zip(&plan.modes.norm2)
        .zip(&plan.modes.weight)
        .map(|((z, n2), w)| w * n2.powf(alpha) * z.norm_sqr())
        .sum();
    Ok(s * grid.volume())
}

/// `‖∇f‖₂² = L^n Σ_ξ |ξ|² |f̂(ξ)|²`.
pub fn gradient_energy(f: &Field) -> f64 {
    let grid = *f.grid();
    let plan = plan_for(&grid);
    let c = f.coefficients();
    let s: f64 = c
        .iter()
        .zip(&plan.modes.norm2)
        .zip(&plan.modes.weight)
        .map(|((z, n2), w)| w * n2 * z.norm_sqr())
        .sum();
    s * grid.volume()
}

/// `∫ |f|^{p-2} f Λ^{2α} f dx` by pointwise products on the grid.
pub fn dissipation_functional(f: &Field, p: f64, alpha: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Parameter(format!(
            "dissipation functional needs p >= 2, got {p}"
        )));
    }
    let lf = fractional_laplacian(f, 2.0 * alpha)?;
    pairing_with_power(f, &lf, p)
}

/// `∫ |g|^{p-2} g h dx`.
pub(crate) fn pairing_with_power(g: &Field, h: &Field, p: f64) -> Result<f64> {
    g.check_same_grid(h)?;
    let a = g.values();
    let b = h.values();
    let s: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(&x, &y)| pow_abs(x, p - 2.0) * x * y)
        .sum();
    Ok(s * g.grid().cell_volume())
}

/// Both suprema of the bmo norm over dyadic cubes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BmoReport {
    /// `sup_{|Q| <= 1} |Q|^{-1} ∫_Q |f - f_Q|`.
    pub small_cubes: f64,
    /// `sup_{|Q| > 1} |Q|^{-1} ∫_Q |f|`.
    pub large_cubes: f64,
}

impl BmoReport {
    pub fn value(&self) -> f64 {
        self.small_cubes.max(self.large_cubes)
    }
}

/// bmo norm with balls replaced by dyadic cubes of side `L / 2^m`, anchored
/// on a lattice of half the cube side (periodic wrap).
pub fn bmo_norm(f: &Field) -> BmoReport {
    bmo_report(f)
}

pub fn bmo_report(f: &Field) -> BmoReport {
    let grid = *f.grid();
    let v = f.values();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let dx = grid.spacing();
    let mut small = 0.0f64;
    let mut large = 0.0f64;
    let mut side = n;
    while side >= 1 {
        let vol = (side as f64 * dx).powi(dim as i32);
        let stride = (side / 2).max(1);
        let anchors: Vec<[usize; 2]> = if dim == 1 {
            (0..n).step_by(stride).map(|a| [a, 0]).collect()
        } else {
            let a: Vec<usize> = (0..n).step_by(stride).collect();
            a.iter()
                .flat_map(|&x| a.iter().map(move |&y| [x, y]))
                .collect()
        };
        let cells = side.pow(dim as u32) as f64;
        let best = anchors
            .par_iter()
            .map(|&[a0, a1]| {
                let idx = |i: usize, j: usize| {
                    if dim == 1 {
                        (a0 + i) % n
                    } else {
                        ((a0 + i) % n) * n + (a1 + j) % n
                    }
                };
                let js = if dim == 1 { 1 } else { side };
                let mut sum = 0.0;
                let mut sum_abs = 0.0;
                for i in 0..side {
                    for j in 0..js {
                        let x = v[idx(i, j)];
                        sum += x;
                        sum_abs += x.abs();
                    }
                }
                if vol > 1.0 {
                    return sum_abs / cells;
                }
                let mean = sum / cells;
                let mut osc = 0.0;
                for i in 0..side {
                    for j in 0..js {
                        osc += (v[idx(i, j)] - mean).abs();
                    }
                }
                osc / cells
            })
            .reduce(|| 0.0, f64::max);
        if vol > 1.0 {
            large = large.max(best);
        } else {
            small = small.max(best);
        }
        side /= 2;
    }
    BmoReport {
        small_cubes: small,
        large_cubes: large,
    }
}

/// Which optional norms a [`NormReport`] should include.
#[derive(Clone, Debug)]
pub struct NormSettings {
    pub lp_orders: Vec<f64>,
    pub alpha: f64,
    pub holder_gamma: Option<f64>,
    /// `(s, p)` of the Besov seminorm.
    pub besov: Option<(f64, f64)>,
    pub bmo: bool,
}

impl NormSettings {
    /// L^1, L^2, L^4 and the Ḣ^α energy only.
    pub fn cheap(alpha: f64) -> Self {
        Self {
            lp_orders: vec![1.0, 2.0, 4.0],
            alpha,
            holder_gamma: None,
            besov: None,
            bmo: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    /// `(p, ‖f‖_p)` pairs.
    pub lp: Vec<(f64, f64)>,
    pub linf: f64,
    pub holder_seminorm: Option<f64>,
    pub besov_seminorm_p: Option<f64>,
    pub sobolev_alpha_energy: f64,
    pub bmo: Option<f64>,
    pub min_value: f64,
    pub max_value: f64,
}

impl NormReport {
    pub fn compute(f: &Field, settings: &NormSettings) -> Result<Self> {
        let f = f.to_physical();
        let (min_value, max_value) = range_monitor(&f);
        let lp = settings
            .lp_orders
            .iter()
            .map(|&p| Ok((p, lp_norm(&f, p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lp,
            linf: min_value.abs().max(max_value.abs()),
            holder_seminorm: settings
                .holder_gamma
                .map(|g| holder_seminorm(&f, g))
                .transpose()?,
            besov_seminorm_p: settings
                .besov
                .map(|(s, p)| besov_seminorm(&f, s, p))
                .transpose()?,
            sobolev_alpha_energy: sobolev_alpha_energy(&f, settings.alpha)?,
            bmo: settings.bmo.then(|| bmo_norm(&f).value()),
            min_value,
            max_value,
        })
    }

    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(g: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_values(g, v).unwrap()
    }

    /// Smooth random trigonometric polynomial with modes up to `kmax`.
    fn smooth_field(g: Grid, seed: u64, kmax: i32) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for a in -kmax..=kmax {
            for b in -kmax..=kmax {
                terms.push((
                    a as f64,
                    b as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..2.0 * PI),
                ));
            }
        }
        let kf = g.fundamental();
        Field::from_fn(g, |x| {
            terms
                .iter()
                .map(|(a, b, c, ph)| c * (kf * (a * x[0] + b * x[1]) + ph).cos())
                .sum()
        })
    }

    #[test]
    fn lp_examples() {
        let g = Grid::square(32, 3.0).unwrap();
        let c = Field::constant(g, 2.0);
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&c, p).unwrap() - 2.0 * 9f64.powf(1.0 / p)).abs() < 1e-12);
        }
        let g2 = Grid::square(32, 2.0 * PI).unwrap();
        let s = Field::from_fn(g2, |x| x[0].sin());
        assert!((lp_norm(&s, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        let r = random_field(g, 4);
        let parseval = r.inner_spectral(&r).unwrap().sqrt();
        assert!((lp_norm(&r, 2.0).unwrap() - parseval).abs() < 1e-10 * parseval);
        assert!(matches!(lp_norm(&r, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn range_examples() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        assert_eq!(range_monitor(&Field::constant(g, 1.5)), (1.5, 1.5));
        let (lo, hi) = range_monitor(&Field::from_fn(g, |x| x[0].sin()));
        assert!((lo + 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn holder_examples() {
        let g = Grid::square(64, 2.0 * PI).unwrap();
        assert_eq!(holder_seminorm(&Field::constant(g, 3.0), 0.5).unwrap(), 0.0);
        let lip = Field::from_fn(g, |x| x[0].sin().abs());
        let h1 = holder_seminorm(&lip, 1.0).unwrap();
        assert!(h1 <= 1.0 + 1e-12 && h1 > 0.9);
        // Brute force over all pairs of points along x1 for a single mode.
        let k = 3.0;
        let gamma = 0.4;
        let f = Field::from_fn(g, |x| (k * x[0]).sin());
        let shift_value = holder_seminorm(&f, gamma).unwrap();
        let n = 64;
        let dx = g.spacing();
        let mut brute = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let d = g.wrap((a as f64 - b as f64) * dx).abs();
                if a == b || d > PI / 2.0 + 1e-12 {
                    continue;
                }
                let q =
                    ((k * a as f64 * dx).sin() - (k * b as f64 * dx).sin()).abs() / d.powf(gamma);
                brute = brute.max(q);
            }
        }
        assert!((shift_value - brute).abs() < 1e-12 * brute);
        let sharp = k.powf(gamma) * 2f64.powf(1.0 - gamma);
        assert!(shift_value <= sharp && shift_value >= 0.5 * sharp);
        assert!(holder_seminorm(&f, 0.0).is_err());
    }

    #[test]
    fn besov_examples() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        assert_eq!(
            besov_seminorm(&Field::constant(g, 1.0), 0.25, 2.0).unwrap(),
            0.0
        );
        let f = smooth_field(g, 3, 2);
        let a = besov_seminorm(&f, 0.25, 4.0).unwrap();
        let b = besov_seminorm(&f.scale(-2.5), 0.25, 4.0).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
        let mode = |n| {
            besov_seminorm(
                &Field::from_fn(Grid::square(n, 2.0 * PI).unwrap(), |x| x[0].sin()),
                0.25,
                2.0,
            )
            .unwrap()
        };
        let (c, d) = (mode(32), mode(64));
        assert!((c / d - 1.0).abs() < 0.05, "{c} {d}");
        assert!(besov_seminorm(&f, 0.6, 4.0).is_err());
    }

    #[test]
    fn shift_set_thins_large_grids() {
        let small = Grid::square(64, 1.0).unwrap();
        let full = shift_set(&small, 32.0);
        let expected: usize = (-31i32..=32)
            .flat_map(|j| (-31i32..=32).map(move |k| (j, k)))
            .filter(|(j, k)| (j * j + k * k) as f64 <= 1024.0 && (*j, *k) != (0, 0))
            .count();
        let total: f64 = full.iter().map(|s| s.weight).sum();
        assert_eq!(total as usize, expected);
        let big = Grid::square(256, 1.0).unwrap();
        let thin = shift_set(&big, 64.0);
        assert!(thin
            .iter()
            .all(|s| s.j.abs().max(s.k.abs()) <= 32 || (s.j % 2 == 0 && s.k % 2 == 0)));
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        assert_eq!(
            sobolev_alpha_energy(&Field::constant(g, 2.0), 0.5).unwrap(),
            0.0
        );
        // sin(x1) + sin(2 x2): |ξ|^{2α} weights 1 and 2, each ∫sin² = 2π².
        let f = Field::from_fn(g, |x| x[0].sin() + (2.0 * x[1]).sin());
        let e = sobolev_alpha_energy(&f, 0.5).unwrap();
        let hand = 2.0 * PI * PI * (1.0 + 2.0);
        assert!((e - hand).abs() < 1e-10 * hand);
        let r = random_field(g, 8);
        let lam = fractional_laplacian(&r, 0.5).unwrap();
        assert!(
            (sobolev_alpha_energy(&r, 0.25).unwrap() - r.inner(&lam).unwrap()).abs()
                < 1e-10 * r.inner(&lam).unwrap()
        );
        let half = fractional_laplacian(&r, 0.25).unwrap();
        let norm2 = half.inner(&half).unwrap();
        assert!((sobolev_alpha_energy(&r, 0.25).unwrap() - norm2).abs() < 1e-10 * norm2);
    }

    #[test]
    fn dissipation_examples() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        assert_eq!(
            dissipation_functional(&Field::constant(g, 2.0), 4.0, 0.25)
                .unwrap()
                .abs(),
            0.0
        );
        let r = random_field(g, 2);
        let d2 = dissipation_functional(&r, 2.0, 0.25).unwrap();
        let e = sobolev_alpha_energy(&r, 0.25).unwrap();
        assert!((d2 - e).abs() < 1e-10 * e);
        for seed in 0..5 {
            let s = smooth_field(g, seed, 3);
            assert!(dissipation_functional(&s, 4.0, 0.25).unwrap() >= 0.0);
        }
    }

    #[test]
    fn bmo_examples() {
        let g = Grid::square(32, 2.0 * PI).unwrap();
        let c = bmo_norm(&Field::constant(g, -3.0));
        assert!((c.value() - 3.0).abs() < 1e-14);
        assert_eq!(c.small_cubes, 0.0);
        let f = smooth_field(g, 5, 3);
        let f = f.sub(&Field::constant(g, f.mean())).unwrap();
        assert!(bmo_norm(&f).value() <= 2.0 * f.max_abs());
        let shifted = bmo_norm(&f.add(&Field::constant(g, 10.0)).unwrap());
        assert!((shifted.small_cubes - bmo_norm(&f).small_cubes).abs() < 1e-12);
        assert!(shifted.large_cubes > bmo_norm(&f).large_cubes);
    }

    #[test]
    fn bmo_of_log_profile_stays_bounded() {
        let profile = |n: usize| {
            let g = Grid::square(n, 2.0 * PI).unwrap();
            let c = [PI + 0.5 * g.spacing(), PI + 0.5 * g.spacing()];
            let f = Field::from_fn(g, |x| -g.periodic_distance(x, c).ln());
            (bmo_norm(&f).value(), f.max_abs())
        };
        let (b64, m64) = profile(64);
        let (b256, m256) = profile(256);
        assert!(m256 - m64 > 0.9 * 4f64.ln());
        assert!(b256 < 1.2 * b64, "{b64} {b256}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn norm_axioms(seed in 0u64..500, c in -3.0f64..3.0) {
            let g = Grid::square(16, 2.0).unwrap();
            let f = random_field(g, seed);
            let h = random_field(g, seed + 1000);
            let sum = f.add(&h).unwrap();
            for p in [1.0, 2.0, 3.0, f64::INFINITY] {
                let nf = lp_norm(&f, p).unwrap();
                prop_assert!((lp_norm(&f.scale(c), p).unwrap() - c.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
                prop_assert!(lp_norm(&sum, p).unwrap() <= nf + lp_norm(&h, p).unwrap() + 1e-12);
            }
            let bf = besov_seminorm(&f, 0.25, 4.0).unwrap();
            let bh = besov_seminorm(&h, 0.25, 4.0).unwrap();
            prop_assert!(besov_seminorm(&sum, 0.25, 4.0).unwrap() <= bf + bh + 1e-12 * (bf + bh));
            prop_assert!((besov_seminorm(&f.scale(c), 0.25, 4.0).unwrap() - c.abs() * bf).abs() <= 1e-12 * (1.0 + bf));
        }
    }
}
