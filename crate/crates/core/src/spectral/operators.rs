use num_complex::Complex64;

use super::fft::plan_for;
use super::field::{Field, VectorField};
use super::multiplier::{apply_multiplier, Multiplier};
use crate::error::{Error, Result};

/// `Λ^{two_alpha} f = (-Δ)^{two_alpha/2} f`; the mean is sent to zero.
pub fn fractional_laplacian(f: &Field, two_alpha: f64) -> Result<Field> {
    apply_multiplier(f, &Multiplier::fractional_laplacian(two_alpha)?)
}

/// Riesz transform along `axis` (0 for `x1`, 1 for `x2`). Two-dimensional only.
pub fn riesz_transform(f: &Field, axis: usize) -> Result<Field> {
    if f.grid().dim() != 2 {
        return Err(Error::Unsupported(
            "Riesz transforms are implemented for dim = 2".into(),
        ));
    }
    apply_multiplier(f, &Multiplier::riesz(axis)?)
}

/// `exp(-tau (Λ^{two_alpha} - epsilon_visc Δ)) f`.
pub fn semigroup_step(f: &Field, tau: f64, two_alpha: f64, epsilon_visc: f64) -> Result<Field> {
    apply_multiplier(f, &Multiplier::semigroup(tau, two_alpha, epsilon_visc)?)
}

pub fn derivative(f: &Field, axis: usize) -> Result<Field> {
    if axis >= f.grid().dim() {
        return Err(Error::Parameter(format!(
            "axis {axis} out of range for dim {}",
            f.grid().dim()
        )));
    }
    apply_multiplier(f, &Multiplier::derivative(axis)?)
}

pub fn gradient(f: &Field) -> Result<VectorField> {
    (0..f.grid().dim())
        .map(|axis| derivative(f, axis))
        .collect()
}

/// Zeroes every coefficient with a signed index above `N/3` in magnitude on some axis.
pub fn dealias(f: &Field) -> Field {
    let plan = plan_for(f.grid());
    let mut c = f.coefficients().into_owned();
    for (z, keep) in c.iter_mut().zip(&plan.modes.keep) {
        if !keep {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    Field::with_coefficients(*f.grid(), c, f.representation())
}

/// `Σ_j ∂_j (v_j f)`: products formed pointwise, dealiased, then differentiated spectrally.
pub fn divergence_of_product(v: &[Field], f: &Field) -> Result<Field> {
    let grid = *f.grid();
    if v.len() != grid.dim() {
        return Err(Error::Shape(format!(
            "velocity has {} components on a {}-dimensional grid",
            v.len(),
            grid.dim()
        )));
    }
    for c in v {
        f.check_same_grid(c)?;
    }
    let plan = plan_for(&grid);
    let fv = f.values();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    for (axis, comp) in v.iter().enumerate() {
        let cv = comp.values();
        let prod: Vec<f64> = cv.iter().zip(fv.iter()).map(|(a, b)| a * b).collect();
        let ph = plan.forward(&prod);
        let d = Multiplier::derivative(axis)?.tabulate(&grid)?;
        for i in 0..acc.len() {
            if plan.modes.keep[i] {
                acc[i] += d[i] * ph[i];
            }
        }
    }
    Ok(Field::with_coefficients(grid, acc, f.representation()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::square(32, 2.0 * PI).unwrap()
    }

    fn random_field(g: Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_values(g, v).unwrap()
    }

    fn assert_close(a: &Field, b: &Field, tol: f64) {
        let x = a.values();
        let y = b.values();
        let scale = b.max_abs().max(1.0);
        for (p, q) in x.iter().zip(y.iter()) {
            assert!((p - q).abs() <= tol * scale, "{p} vs {q}");
        }
    }

    #[test]
    fn fractional_laplacian_examples() {
        let g = grid();
        let s1 = Field::from_fn(g, |x| x[0].sin());
        assert_close(&fractional_laplacian(&s1, 1.0).unwrap(), &s1, 1e-13);
        assert_close(&fractional_laplacian(&s1, 2.0).unwrap(), &s1, 1e-13);
        let s2 = Field::from_fn(g, |x| (2.0 * x[0]).sin());
        let expected = s2.scale(2f64.sqrt());
        assert_close(&fractional_laplacian(&s2, 0.5).unwrap(), &expected, 1e-13);
        let c = Field::constant(g, 3.0);
        assert!(fractional_laplacian(&c, 0.5).unwrap().max_abs() < 1e-14);
        assert!(fractional_laplacian(&c, 2.5).is_err());
    }

    #[test]
    fn riesz_examples() {
        let g = grid();
        let s = Field::from_fn(g, |x| x[0].sin());
        let r1 = riesz_transform(&s, 0).unwrap();
        assert_close(&r1, &Field::from_fn(g, |x| -x[0].cos()), 1e-13);
        assert!(riesz_transform(&s, 1).unwrap().max_abs() < 1e-14);
        let f = random_field(g, 3);
        let f = f.sub(&Field::constant(g, f.mean())).unwrap();
        let r11 = riesz_transform(&riesz_transform(&f, 0).unwrap(), 0).unwrap();
        let r22 = riesz_transform(&riesz_transform(&f, 1).unwrap(), 1).unwrap();
        // Nyquist lines are annihilated by odd symbols; compare off those lines.
        let sum = dealias(&r11.add(&r22).unwrap());
        assert_close(&sum, &dealias(&f).scale(-1.0), 1e-12);
        let g1 = Grid::new(1, 16, 1.0).unwrap();
        assert!(matches!(
            riesz_transform(&Field::zeros(g1), 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn semigroup_examples() {
        let g = grid();
        let f = random_field(g, 11);
        let c = Field::constant(g, 1.5);
        assert_close(&semigroup_step(&c, 0.7, 0.5, 0.1).unwrap(), &c, 1e-14);
        let small = semigroup_step(&dealias(&f), 1e-9, 0.5, 0.0).unwrap();
        assert_close(&small, &dealias(&f), 1e-7);
        let a =
            semigroup_step(&semigroup_step(&f, 0.1, 0.5, 0.01).unwrap(), 0.2, 0.5, 0.01).unwrap();
        let b = semigroup_step(&f, 0.3, 0.5, 0.01).unwrap();
        assert_close(&a, &b, 1e-12);
        assert!(semigroup_step(&f, -0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn divergence_examples() {
        let g = grid();
        let c = 0.7;
        let v = vec![Field::constant(g, c), Field::zeros(g)];
        let f = Field::from_fn(g, |x| x[0].sin());
        let d = divergence_of_product(&v, &f).unwrap();
        assert_close(&d, &Field::from_fn(g, |x| c * x[0].cos()), 1e-13);
        let u = vec![
            Field::from_fn(g, |x| 2.0 * (x[0] + 2.0 * x[1]).cos()),
            Field::from_fn(g, |x| -(x[0] + 2.0 * x[1]).cos()),
        ];
        let d0 = divergence_of_product(&u, &Field::constant(g, 2.0)).unwrap();
        assert!(d0.max_abs() < 1e-12);
        let w = vec![random_field(g, 1), random_field(g, 2)];
        let h = random_field(g, 3);
        assert!(divergence_of_product(&w, &h).unwrap().integral().abs() < 1e-12);
        let other = Grid::square(16, 2.0 * PI).unwrap();
        assert!(matches!(
            divergence_of_product(&[Field::zeros(other), Field::zeros(other)], &h),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn dealias_examples() {
        let g = grid();
        let nyq = Field::from_fn(g, |x| (16.0 * x[0]).cos());
        assert!(dealias(&nyq).max_abs() < 1e-14);
        let low = Field::from_fn(g, |x| x[1].cos());
        assert_close(&dealias(&low), &low, 1e-14);
        let f = random_field(g, 5).to_spectral();
        assert_eq!(dealias(&dealias(&f)), dealias(&f));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn riesz_is_skew_adjoint(seed in 0u64..1000, axis in 0usize..2) {
            let g = Grid::square(16, 3.0).unwrap();
            let f = random_field(g, seed);
            let h = random_field(g, seed + 7919);
            let lhs = riesz_transform(&f, axis).unwrap().inner(&h).unwrap();
            let rhs = -f.inner(&riesz_transform(&h, axis).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn fractional_laplacian_self_adjoint_positive(seed in 0u64..1000, two_alpha in 0.05f64..2.0) {
            let g = Grid::square(16, 2.5).unwrap();
            let f = random_field(g, seed);
            let h = random_field(g, seed + 104729);
            let lf = fractional_laplacian(&f, two_alpha).unwrap();
            let lh = fractional_laplacian(&h, two_alpha).unwrap();
            let a = f.inner(&lh).unwrap();
            let b = lf.inner(&h).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
            prop_assert!(f.inner(&lf).unwrap() >= 0.0);
        }

        #[test]
        fn semigroup_contracts_l2(seed in 0u64..1000, tau in 0.0f64..2.0, eps in 0.0f64..0.5) {
            let g = Grid::square(16, 2.0 * PI).unwrap();
            let f = random_field(g, seed);
            let s = semigroup_step(&f, tau, 0.5, eps).unwrap();
            prop_assert!(s.inner(&s).unwrap() <= f.inner(&f).unwrap() * (1.0 + 1e-12));
        }
    }
}
