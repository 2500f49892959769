use num_complex::Complex64;
use std::borrow::Cow;

use super::fft::plan_for;
use super::grid::{Grid, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug, PartialEq)]
enum Data {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// Real scalar field on a periodic grid, held either as samples or as its
/// half-spectrum Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Data,
}

/// Vector field as a list of components (one per axis).
pub type VectorField = Vec<Field>;

impl Field {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("field samples must be finite".into()));
        }
        Ok(Self {
            grid,
            data: Data::Physical(values),
        })
    }

    pub fn from_spectrum(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                grid.spectral_len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid,
            data: Data::Spectral(coeffs),
        })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid,
            data: Data::Physical(values),
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            data: Data::Physical(vec![c; grid.len()]),
        }
    }

    pub(crate) fn physical_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        Self {
            grid,
            data: Data::Physical(values),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            Data::Physical(_) => Representation::Physical,
            Data::Spectral(_) => Representation::Spectral,
        }
    }

    /// Changes representation. The source representation must match the direction.
    pub fn transform(&self, direction: Direction) -> Result<Field> {
        match (direction, &self.data) {
            (Direction::Forward, Data::Physical(v)) => {
                let coeffs = plan_for(&self.grid).forward(v);
                Ok(Self {
                    grid: self.grid,
                    data: Data::Spectral(coeffs),
                })
            }
            (Direction::Inverse, Data::Spectral(c)) => {
                let values = plan_for(&self.grid).inverse(c);
                Ok(Self {
                    grid: self.grid,
                    data: Data::Physical(values),
                })
            }
            (Direction::Forward, _) => Err(Error::Shape(
                "forward transform needs a physical field".into(),
            )),
            (Direction::Inverse, _) => Err(Error::Shape(
                "inverse transform needs a spectral field".into(),
            )),
        }
    }

    /// Samples, transforming if needed.
    pub fn values(&self) -> Cow<'_, [f64]> {
        match &self.data {
            Data::Physical(v) => Cow::Borrowed(v),
            Data::Spectral(c) => Cow::Owned(plan_for(&self.grid).inverse(c)),
        }
    }

    /// Half-spectrum coefficients, transforming if needed.
    pub fn coefficients(&self) -> Cow<'_, [Complex64]> {
        match &self.data {
            Data::Spectral(c) => Cow::Borrowed(c),
            Data::Physical(v) => Cow::Owned(plan_for(&self.grid).forward(v)),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        match self.data {
            Data::Physical(v) => v,
            Data::Spectral(c) => plan_for(&self.grid).inverse(&c),
        }
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        match self.data {
            Data::Spectral(c) => c,
            Data::Physical(v) => plan_for(&self.grid).forward(&v),
        }
    }

    pub fn to_physical(&self) -> Field {
        Self {
            grid: self.grid,
            data: Data::Physical(self.values().into_owned()),
        }
    }

    pub fn to_spectral(&self) -> Field {
        Self {
            grid: self.grid,
            data: Data::Spectral(self.coefficients().into_owned()),
        }
    }

    /// Rebuilds a field in the given representation from coefficients.
    pub(crate) fn with_coefficients(
        grid: Grid,
        coeffs: Vec<Complex64>,
        repr: Representation,
    ) -> Field {
        match repr {
            Representation::Spectral => Self {
                grid,
                data: Data::Spectral(coeffs),
            },
            Representation::Physical => Self {
                grid,
                data: Data::Physical(plan_for(&grid).inverse(&coeffs)),
            },
        }
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    /// Pointwise map in physical space.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        let values = self.values().iter().map(|&x| f(x)).collect();
        Self::physical_unchecked(self.grid, values)
    }

    /// Pointwise combination in physical space.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        let a = self.values();
        let b = other.values();
        let values = a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Self::physical_unchecked(self.grid, values))
    }

    pub fn scale(&self, c: f64) -> Field {
        match &self.data {
            Data::Physical(v) => {
                Self::physical_unchecked(self.grid, v.iter().map(|x| c * x).collect())
            }
            Data::Spectral(s) => Self {
                grid: self.grid,
                data: Data::Spectral(s.iter().map(|x| x * c).collect()),
            },
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `∫ f dx` by the rectangle rule (exact for trigonometric polynomials).
    pub fn integral(&self) -> f64 {
        self.values().iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.volume()
    }

    /// `∫ f g dx` on the grid.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        let a = self.values();
        let b = other.values();
        let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `∫ f g dx` evaluated through the Parseval sum over the half spectrum.
    pub fn inner_spectral(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        let plan = plan_for(&self.grid);
        let a = self.coefficients();
        let b = other.coefficients();
        let s: f64 = a
            .iter()
            .zip(b.iter())
            .zip(plan.modes.weight.iter())
            .map(|((x, y), w)| w * (x * y.conj()).re)
            .sum();
        Ok(s * self.grid.volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            Data::Physical(v) => v.iter().all(|x| x.is_finite()),
            Data::Spectral(c) => c.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        }
    }
}
