//! Cached real-to-complex transforms and per-grid mode tables.
//!
//! The forward transform is normalized so that a constant field `c` maps to the
//! coefficient `c` at the zero mode: `f̂(k) = N^{-dim} Σ_x f(x) e^{-i ξ·x}`.
//! Coefficients live in the half-spectrum layout `[k0][k1]` with `k1 = 0..=N/2`
//! along the last axis.

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::grid::{signed_index, Grid, Point};

/// Per-coefficient data for the half-spectrum layout of one grid.
pub(crate) struct ModeTable {
    /// Integer wavevector of each stored coefficient (signed FFT indices).
    pub index: Vec<[isize; 2]>,
    /// Physical wavevector `2π/L · index`.
    pub xi: Vec<Point>,
    /// Wavevector of the conjugate partner `-index mod N`. Differs from `-xi`
    /// exactly on Nyquist lines.
    pub partner: Vec<Point>,
    pub on_nyquist: Vec<bool>,
    /// `|xi|^2`.
    pub norm2: Vec<f64>,
    /// Multiplicity of the coefficient in the full spectrum (1 or 2).
    pub weight: Vec<f64>,
    /// True when the coefficient survives the 2/3 rule.
    pub keep: Vec<bool>,
}

impl ModeTable {
    fn new(grid: &Grid) -> Self {
        let n = grid.points_per_axis();
        let h = n / 2 + 1;
        let kf = grid.fundamental();
        let len = grid.spectral_len();
        let mut t = ModeTable {
            index: Vec::with_capacity(len),
            xi: Vec::with_capacity(len),
            partner: Vec::with_capacity(len),
            on_nyquist: Vec::with_capacity(len),
            norm2: Vec::with_capacity(len),
            weight: Vec::with_capacity(len),
            keep: Vec::with_capacity(len),
        };
        let rows = if grid.dim() == 1 { 1 } else { n };
        for i0 in 0..rows {
            for i1 in 0..h {
                let (k, p) = if grid.dim() == 1 {
                    let k = signed_index(i1, n);
                    let p = signed_index((n - i1) % n, n);
                    ([k, 0], [p, 0])
                } else {
                    let k = [signed_index(i0, n), signed_index(i1, n)];
                    let p = [signed_index((n - i0) % n, n), signed_index((n - i1) % n, n)];
                    (k, p)
                };
                let xi = [k[0] as f64 * kf, k[1] as f64 * kf];
                t.index.push(k);
                t.xi.push(xi);
                t.partner.push([p[0] as f64 * kf, p[1] as f64 * kf]);
                t.on_nyquist.push(p[0] != -k[0] || p[1] != -k[1]);
                t.norm2.push(xi[0] * xi[0] + xi[1] * xi[1]);
                t.weight
                    .push(if i1 == 0 || i1 == n / 2 { 1.0 } else { 2.0 });
                let limit = n as isize;
                t.keep
                    .push(3 * k[0].abs() <= limit && 3 * k[1].abs() <= limit);
            }
        }
        t
    }
}

pub(crate) struct Plan {
    grid: Grid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    pub modes: ModeTable,
}

type PlanKey = (usize, usize, u64);

static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<Plan>>>> = OnceLock::new();

/// Shared plan for a grid, built on first use.
pub(crate) fn plan_for(grid: &Grid) -> Arc<Plan> {
    let key = (
        grid.dim(),
        grid.points_per_axis(),
        grid.box_length().to_bits(),
    );
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(key)
        .or_insert_with(|| Arc::new(Plan::new(*grid)))
        .clone()
}

impl Plan {
    fn new(grid: Grid) -> Self {
        let n = grid.points_per_axis();
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Plan {
            grid,
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            col_fwd: cp.plan_fft_forward(n),
            col_inv: cp.plan_fft_inverse(n),
            modes: ModeTable::new(&grid),
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.grid.points_per_axis();
        let h = n / 2 + 1;
        let rows = values.len() / n;
        let mut input = values.to_vec();
        let mut spec = vec![Complex64::new(0.0, 0.0); rows * h];
        let r2c = &self.r2c;
        input
            .par_chunks_mut(n)
            .zip(spec.par_chunks_mut(h))
            .for_each_init(
                || r2c.make_scratch_vec(),
                |scratch, (row, out)| {
                    r2c.process_with_scratch(row, out, scratch)
                        .expect("buffer sizes match the plan");
                },
            );
        if self.grid.dim() == 2 {
            self.columns(&mut spec, &self.col_fwd);
        }
        let scale = 1.0 / values.len() as f64;
        spec.iter_mut().for_each(|c| *c *= scale);
        spec
    }

    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.grid.points_per_axis();
        let h = n / 2 + 1;
        let rows = coeffs.len() / h;
        let mut spec = coeffs.to_vec();
        if self.grid.dim() == 2 {
            self.columns(&mut spec, &self.col_inv);
        }
        let mut out = vec![0.0; rows * n];
        let c2r = &self.c2r;
        spec.par_chunks_mut(h)
            .zip(out.par_chunks_mut(n))
            .for_each_init(
                || c2r.make_scratch_vec(),
                |scratch, (row, dst)| {
                    // Self-conjugate entries must be real for a real output.
                    row[0].im = 0.0;
                    row[h - 1].im = 0.0;
                    c2r.process_with_scratch(row, dst, scratch)
                        .expect("buffer sizes match the plan");
                },
            );
        out
    }

    /// Complex transform along axis 0 of a `[n][h]` buffer.
    fn columns(&self, spec: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis();
        let h = n / 2 + 1;
        let mut cols = vec![Complex64::new(0.0, 0.0); n * h];
        for i0 in 0..n {
            for k1 in 0..h {
                cols[k1 * n + i0] = spec[i0 * h + k1];
            }
        }
        cols.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            |scratch, col| fft.process_with_scratch(col, scratch),
        );
        for i0 in 0..n {
            for k1 in 0..h {
                spec[i0 * h + k1] = cols[k1 * n + i0];
            }
        }
    }
}
