use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A point in the box. One-dimensional grids leave the second component at 0.
pub type Point = [f64; 2];

/// Uniform discretization of the periodic box `[0, L)^dim`.
///
/// Samples are stored row-major: in 2D the flat index is `i0 * n + i1`, where
/// axis 0 carries the coordinate `x1` and axis 1 carries `x2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "points_per_axis must be a power of two and at least 8, got {points_per_axis}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Config(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        Ok(Self {
            dim,
            n: points_per_axis,
            length: box_length,
        })
    }

    /// Square 2D grid; the common case.
    pub fn square(points_per_axis: usize, box_length: f64) -> Result<Self> {
        Self::new(2, points_per_axis, box_length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Physical volume of the box, `L^dim`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Number of physical samples.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of stored coefficients in the real-to-complex half spectrum.
    pub fn spectral_len(&self) -> usize {
        self.n.pow(self.dim as u32 - 1) * (self.n / 2 + 1)
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest wavevector magnitude kept by the 2/3 dealiasing mask.
    pub fn max_dealiased_wavenumber(&self) -> f64 {
        let kmax = (self.n / 3) as f64 * self.fundamental();
        kmax * (self.dim as f64).sqrt()
    }

    /// Coordinates of a flat sample index.
    pub fn point(&self, index: usize) -> Point {
        let dx = self.spacing();
        match self.dim {
            1 => [index as f64 * dx, 0.0],
            _ => [(index / self.n) as f64 * dx, (index % self.n) as f64 * dx],
        }
    }

    /// Multi-index of a flat sample index (second entry is 0 in 1D).
    pub fn multi_index(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index / self.n, index % self.n],
        }
    }

    /// Flat index of a (wrapped) multi-index.
    pub fn flat_index(&self, i0: isize, i1: isize) -> usize {
        let n = self.n as isize;
        let a = i0.rem_euclid(n) as usize;
        match self.dim {
            1 => a,
            _ => a * self.n + i1.rem_euclid(n) as usize,
        }
    }

    /// Wraps a coordinate difference into `[-L/2, L/2)`.
    pub fn wrap(&self, delta: f64) -> f64 {
        let l = self.length;
        (delta + 0.5 * l).rem_euclid(l) - 0.5 * l
    }

    /// Periodic (minimum image) distance between two points.
    pub fn periodic_distance(&self, a: Point, b: Point) -> f64 {
        let mut s = 0.0;
        for axis in 0..self.dim {
            let d = self.wrap(a[axis] - b[axis]);
            s += d * d;
        }
        s.sqrt()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

/// Signed FFT index: `j` for `j < n/2`, `j - n` otherwise (Nyquist maps to `-n/2`).
pub(crate) fn signed_index(j: usize, n: usize) -> isize {
    if j < n / 2 {
        j as isize
    } else {
        j as isize - n as isize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(2, 4, 1.0).is_err());
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(2, 16, 0.0).is_err());
        assert!(Grid::new(1, 16, 2.0).is_ok());
    }

    #[test]
    fn wrap_and_distance() {
        let g = Grid::square(16, 2.0).unwrap();
        assert!((g.wrap(1.5) + 0.5).abs() < 1e-15);
        assert!((g.wrap(-1.2) - 0.8).abs() < 1e-15);
        let d = g.periodic_distance([0.1, 0.1], [1.9, 1.9]);
        assert!((d - (0.08f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 8), 0);
        assert_eq!(signed_index(3, 8), 3);
        assert_eq!(signed_index(4, 8), -4);
        assert_eq!(signed_index(7, 8), -1);
    }
}
