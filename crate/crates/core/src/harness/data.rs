//! Initial data used by the presets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::spectral::{Field, Grid, Point};

/// Mean-zero random trigonometric polynomial with modes `1 <= max|k_i| <= kmax`,
/// scaled so that its grid maximum of `|θ|` equals `amplitude`.
pub fn random_smooth(grid: Grid, seed: u64, kmax: i32, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kf = grid.fundamental();
    let mut terms = Vec::new();
    let k1_range = if grid.dim() == 2 { -kmax..=kmax } else { 0..=0 };
    for k0 in 0..=kmax {
        for k1 in k1_range.clone() {
            if k0 == 0 && k1 <= 0 {
                continue;
            }
            let c = rng.gen_range(-1.0..1.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            terms.push((k0 as f64 * kf, k1 as f64 * kf, c, phase));
        }
    }
    let f = Field::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(a, b, c, p)| c * (a * x[0] + b * x[1] + p).cos())
            .sum()
    });
    let m = f.max_abs();
    f.scale(amplitude / m)
}

/// `Π_a ((1 + cos(2π(x_a - c_a)/L)) / 2)^power`: range exactly `[0, 1]`.
pub fn cosine_bump(grid: Grid, center: Point, power: i32) -> Field {
    let kf = grid.fundamental();
    let dim = grid.dim();
    Field::from_fn(grid, |x| {
        (0..dim)
            .map(|a| (0.5 * (1.0 + (kf * (x[a] - center[a])).cos())).powi(power))
            .product()
    })
}

/// Indicator of the periodic ball of radius `radius` about `center`.
pub fn ball_indicator(grid: Grid, center: Point, radius: f64) -> Field {
    Field::from_fn(grid, |x| {
        if grid.periodic_distance(x, center) < radius {
            1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_smooth_is_mean_zero_and_normalized() {
        let g = Grid::square(64, 2.0 * PI).unwrap();
        let f = random_smooth(g, 3, 4, 1.0);
        assert!(f.mean().abs() < 1e-14);
        assert!((f.max_abs() - 1.0).abs() < 1e-15);
        assert_eq!(random_smooth(g, 3, 4, 1.0), f);
    }

    #[test]
    fn bump_range() {
        let g = Grid::square(64, 2.0 * PI).unwrap();
        let b = cosine_bump(g, [PI, PI], 4);
        let (lo, hi) = crate::analysis::range_monitor(&b);
        assert!(lo >= 0.0 && hi <= 1.0 && hi == 1.0);
    }
}
