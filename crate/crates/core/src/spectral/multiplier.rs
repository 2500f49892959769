use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use super::fft::plan_for;
use super::field::Field;
use super::grid::{Grid, Point};
use crate::error::{Error, Result};

type Symbol = dyn Fn(Point) -> Complex64 + Send + Sync;

/// Fourier multiplier given by a symbol `m(ξ)` in physical wavenumber units.
///
/// On the discrete grid a coefficient whose conjugate partner is not `-ξ`
/// (the Nyquist lines) receives `(m(ξ) + conj m(ξ_partner)) / 2`, which keeps
/// the output real. Elsewhere the symbol is used as is and must satisfy
/// `m(-ξ) = conj m(ξ)`.
#[derive(Clone)]
pub struct Multiplier {
    name: String,
    symbol: Arc<Symbol>,
    /// Built-in symbols are Hermitian by construction and skip the check.
    hermitian: bool,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("name", &self.name)
            .finish()
    }
}

impl Multiplier {
    pub fn new(
        name: impl Into<String>,
        symbol: impl Fn(Point) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            symbol: Arc::new(symbol),
            hermitian: false,
        }
    }

    fn builtin(
        name: impl Into<String>,
        symbol: impl Fn(Point) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            hermitian: true,
            ..Self::new(name, symbol)
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, xi: Point) -> Complex64 {
        (self.symbol)(xi)
    }

    /// `|ξ|^{two_alpha}`, zero at the origin.
    pub fn fractional_laplacian(two_alpha: f64) -> Result<Self> {
        check_two_alpha(two_alpha)?;
        Ok(Self::builtin(format!("Lambda^{two_alpha}"), move |xi| {
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            Complex64::new(n2.powf(0.5 * two_alpha), 0.0)
        }))
    }

    /// Riesz transform `-i ξ_axis / |ξ|`, zero at the origin. Axis 0 is `x1`.
    pub fn riesz(axis: usize) -> Result<Self> {
        check_axis(axis)?;
        Ok(Self::builtin(format!("R{}", axis + 1), move |xi| {
            let n = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if n == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -xi[axis] / n)
            }
        }))
    }

    /// Partial derivative `i ξ_axis`.
    pub fn derivative(axis: usize) -> Result<Self> {
        check_axis(axis)?;
        Ok(Self::builtin(format!("d{}", axis + 1), move |xi| {
            Complex64::new(0.0, xi[axis])
        }))
    }

    /// `exp(-tau (|ξ|^{two_alpha} + epsilon_visc |ξ|^2))`.
    pub fn semigroup(tau: f64, two_alpha: f64, epsilon_visc: f64) -> Result<Self> {
        check_two_alpha(two_alpha)?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!(
                "semigroup time must be nonnegative, got {tau}"
            )));
        }
        if !(epsilon_visc >= 0.0 && epsilon_visc.is_finite()) {
            return Err(Error::Parameter(format!(
                "viscosity must be nonnegative, got {epsilon_visc}"
            )));
        }
        Ok(Self::builtin("semigroup", move |xi| {
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            Complex64::new(
                (-tau * (n2.powf(0.5 * two_alpha) + epsilon_visc * n2)).exp(),
                0.0,
            )
        }))
    }

    /// Gaussian smoothing `exp(-eps^2 |ξ|^2 / 2)`: convolution with a unit-mass
    /// Gaussian of standard deviation `eps`.
    pub fn gaussian_mollifier(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!(
                "mollifier width must be nonnegative, got {eps}"
            )));
        }
        Ok(Self::builtin("mollifier", move |xi| {
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            Complex64::new((-0.5 * eps * eps * n2).exp(), 0.0)
        }))
    }

    /// Symbol values for every stored coefficient of `grid`.
    pub fn tabulate(&self, grid: &Grid) -> Result<Vec<Complex64>> {
        let plan = plan_for(grid);
        let modes = &plan.modes;
        let mut out = Vec::with_capacity(modes.xi.len());
        for i in 0..modes.xi.len() {
            let m = self.eval(modes.xi[i]);
            let mp = if self.hermitian && !modes.on_nyquist[i] {
                m.conj()
            } else {
                self.eval(modes.partner[i])
            };
            if !(m.re.is_finite() && m.im.is_finite() && mp.re.is_finite() && mp.im.is_finite()) {
                return Err(Error::Validation(format!(
                    "multiplier {} is not finite at {:?}",
                    self.name, modes.xi[i]
                )));
            }
            if modes.on_nyquist[i] {
                out.push(0.5 * (m + mp.conj()));
            } else {
                if (m - mp.conj()).norm() > 1e-12 * (m.norm() + 1.0) {
                    return Err(Error::Validation(format!(
                        "multiplier {} breaks Hermitian symmetry at {:?}",
                        self.name, modes.xi[i]
                    )));
                }
                out.push(m);
            }
        }
        Ok(out)
    }
}

/// Multiplies every coefficient by the symbol. Output keeps the input representation.
pub fn apply_multiplier(f: &Field, m: &Multiplier) -> Result<Field> {
    let table = m.tabulate(f.grid())?;
    Ok(apply_table(f, &table))
}

pub(crate) fn apply_table(f: &Field, table: &[Complex64]) -> Field {
    let mut c = f.coefficients().into_owned();
    c.iter_mut().zip(table).for_each(|(z, m)| *z *= m);
    Field::with_coefficients(*f.grid(), c, f.representation())
}

pub(crate) fn check_two_alpha(two_alpha: f64) -> Result<()> {
    if two_alpha > 0.0 && two_alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "two_alpha must lie in (0, 2], got {two_alpha}"
        )))
    }
}

fn check_axis(axis: usize) -> Result<()> {
    if axis < 2 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("axis must be 0 or 1, got {axis}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_non_hermitian_symbol() {
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let bad = Multiplier::new("shift", |xi| Complex64::new(1.0 + xi[0], 0.0));
        assert!(matches!(bad.tabulate(&g), Err(Error::Validation(_))));
        let odd_ok = Multiplier::new("odd", |xi| Complex64::new(0.0, xi[0]));
        assert!(odd_ok.tabulate(&g).is_ok());
    }

    #[test]
    fn nyquist_line_of_odd_symbol_vanishes() {
        let g = Grid::new(1, 16, 2.0 * PI).unwrap();
        let t = Multiplier::derivative(0).unwrap().tabulate(&g).unwrap();
        assert_eq!(t[8], Complex64::new(0.0, 0.0));
        assert_eq!(t[3], Complex64::new(0.0, 3.0));
    }

    #[test]
    fn parameter_checks() {
        assert!(Multiplier::fractional_laplacian(0.0).is_err());
        assert!(Multiplier::fractional_laplacian(2.5).is_err());
        assert!(Multiplier::riesz(2).is_err());
        assert!(Multiplier::semigroup(-1.0, 1.0, 0.0).is_err());
    }
}
