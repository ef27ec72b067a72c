//! FFT-based differential operators on periodic grids.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cached FFT plans and wavenumber tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    /// Wavenumbers for first derivatives; the Nyquist bin is zeroed so real
    /// fields stay real.
    kd: Vec<Vec<f64>>,
    k_sq: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let rank = grid.rank();
        let mut fwd = Vec::with_capacity(rank);
        let mut inv = Vec::with_capacity(rank);
        let mut kd = Vec::with_capacity(rank);
        let mut kfull = Vec::with_capacity(rank);
        for a in 0..rank {
            let n = grid.extents()[a];
            fwd.push(planner.plan_fft_forward(n));
            inv.push(planner.plan_fft_inverse(n));
            let k = grid.wavenumbers(a);
            let mut d = k.clone();
            d[n / 2] = 0.0;
            kd.push(d);
            kfull.push(k);
        }
        let k_sq = (0..grid.len())
            .map(|i| {
                let idx = grid.unravel(i);
                (0..rank).map(|a| kfull[a][idx[a]].powi(2)).sum()
            })
            .collect();
        Self { grid: *grid, fwd, inv, kd, k_sq }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `|k|^2` per flat Fourier index.
    pub fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.grid.stride(axis)) % self.grid.extents()[axis]
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.extents()[axis];
        let stride = self.grid.stride(axis);
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            return;
        }
        let block = n * stride;
        let mut buf = vec![ZERO; n * stride];
        for chunk in data.chunks_exact_mut(block) {
            // transpose the block so each lane is contiguous
            for j in 0..n {
                for s in 0..stride {
                    buf[s * n + j] = chunk[j * stride + s];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                for s in 0..stride {
                    chunk[j * stride + s] = buf[s * n + j];
                }
            }
        }
    }

    /// Unnormalized forward DFT over all axes.
    pub fn forward(&self, data: &mut [Complex64]) {
        for a in 0..self.grid.rank() {
            self.transform_axis(data, a, &self.fwd[a]);
        }
    }

    /// Inverse DFT including the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for a in 0..self.grid.rank() {
            self.transform_axis(data, a, &self.inv[a]);
        }
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn to_spectrum(&self, f: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut c);
        c
    }

    fn derivative_from_spectrum(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> =
            spec.iter().enumerate().map(|(i, z)| z * I * self.kd[axis][self.axis_index(i, axis)]).collect();
        self.inverse(&mut out);
        out
    }

    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let spec = self.to_spectrum(f);
        self.derivative_from_spectrum(&spec, axis).into_iter().map(|z| z.re).collect()
    }

    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.to_spectrum(f);
        (0..self.grid.rank())
            .map(|a| self.derivative_from_spectrum(&spec, a).into_iter().map(|z| z.re).collect())
            .collect()
    }

    pub fn gradient_complex(&self, f: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut spec = f.to_vec();
        self.forward(&mut spec);
        (0..self.grid.rank()).map(|a| self.derivative_from_spectrum(&spec, a)).collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut spec = self.to_spectrum(f);
        spec.iter_mut().zip(&self.k_sq).for_each(|(z, k2)| *z *= -k2);
        self.inverse(&mut spec);
        spec.into_iter().map(|z| z.re).collect()
    }

    pub fn laplacian_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut spec = f.to_vec();
        self.forward(&mut spec);
        spec.iter_mut().zip(&self.k_sq).for_each(|(z, k2)| *z *= -k2);
        self.inverse(&mut spec);
        spec
    }

    /// `sum_a d/dx_a comps[a]`.
    pub fn divergence(&self, comps: &[Vec<f64>]) -> Vec<f64> {
        let n = self.grid.len();
        let mut acc = vec![ZERO; n];
        for (a, comp) in comps.iter().enumerate() {
            let spec = self.to_spectrum(comp);
            for (i, z) in spec.iter().enumerate() {
                acc[i] += z * I * self.kd[a][self.axis_index(i, a)];
            }
        }
        self.inverse(&mut acc);
        acc.into_iter().map(|z| z.re).collect()
    }

    /// Zero every mode whose index on some axis exceeds two thirds of the
    /// Nyquist index, removing quadratic aliasing.
    pub fn dealias(&self, f: &mut [f64]) {
        let mut spec = self.to_spectrum(f);
        let rank = self.grid.rank();
        for (i, z) in spec.iter_mut().enumerate() {
            let cut = (0..rank).any(|a| {
                let n = self.grid.extents()[a];
                let j = self.axis_index(i, a);
                let m = j.min(n - j);
                3 * m > n
            });
            if cut {
                *z = ZERO;
            }
        }
        self.inverse(&mut spec);
        f.iter_mut().zip(&spec).for_each(|(x, z)| *x = z.re);
    }

    /// Band-limited translation `f(x - d)`.
    pub fn translate(&self, f: &[Complex64], displacement: &[f64]) -> Vec<Complex64> {
        let mut spec = f.to_vec();
        self.forward(&mut spec);
        for (i, z) in spec.iter_mut().enumerate() {
            let phase: f64 = (0..self.grid.rank())
                .map(|a| self.grid.wavenumber(a, self.axis_index(i, a)) * displacement[a])
                .sum();
            *z *= Complex64::from_polar(1.0, -phase);
        }
        self.inverse(&mut spec);
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_trig_is_exact() {
        let g = Grid::centered(&[32, 16], &[2.0 * PI, 4.0 * PI]).unwrap();
        let sp = Spectral::new(&g);
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.position(i);
                (3.0 * x[0]).sin() * (0.5 * x[1]).cos()
            })
            .collect();
        let grad = sp.gradient(&f);
        let lap = sp.laplacian(&f);
        for i in 0..g.len() {
            let x = g.position(i);
            let dx = 3.0 * (3.0 * x[0]).cos() * (0.5 * x[1]).cos();
            let dy = -0.5 * (3.0 * x[0]).sin() * (0.5 * x[1]).sin();
            assert!((grad[0][i] - dx).abs() < 1e-12);
            assert!((grad[1][i] - dy).abs() < 1e-12);
            assert!((lap[i] + 9.25 * f[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn roundtrip_3d() {
        let g = Grid::centered(&[8, 10, 12], &[1.0, 1.0, 1.0]).unwrap();
        let sp = Spectral::new(&g);
        let orig: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let mut d = orig.clone();
        sp.forward(&mut d);
        sp.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn divergence_has_zero_mean() {
        let g = Grid::centered(&[16, 16], &[1.0, 1.0]).unwrap();
        let sp = Spectral::new(&g);
        let comps = vec![
            (0..g.len()).map(|i| ((i * 7919) % 13) as f64).collect::<Vec<_>>(),
            (0..g.len()).map(|i| ((i * 104729) % 11) as f64).collect::<Vec<_>>(),
        ];
        let div = sp.divergence(&comps);
        assert!(div.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn translate_plane_wave() {
        let g = Grid::centered(&[16], &[2.0 * PI]).unwrap();
        let sp = Spectral::new(&g);
        let f: Vec<Complex64> = (0..16).map(|i| Complex64::from_polar(1.0, 2.0 * g.coord(0, i))).collect();
        let t = sp.translate(&f, &[0.3]);
        for i in 0..16 {
            let want = Complex64::from_polar(1.0, 2.0 * (g.coord(0, i) - 0.3));
            assert!((t[i] - want).norm() < 1e-12);
        }
    }
}
