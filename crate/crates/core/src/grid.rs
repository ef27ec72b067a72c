//! Uniform periodic Cartesian meshes and the real/complex fields sampled on them.
//!
//! Samples are stored row-major: axis 0 varies slowest. Axes beyond the rank
//! have extent 1 and are ignored everywhere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

pub const MAX_RANK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    rank: usize,
    extents: [usize; MAX_RANK],
    spacing: [f64; MAX_RANK],
    origin: [f64; MAX_RANK],
}

impl Grid {
    /// Extents must be even and at least 8 on every axis.
    pub fn new(extents: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let rank = extents.len();
        if rank == 0 || rank > MAX_RANK {
            return Err(invalid(format!("grid rank must be 1..=3, got {rank}")));
        }
        if spacing.len() != rank || origin.len() != rank {
            return Err(invalid("extents, spacing and origin must have equal length"));
        }
        let mut g = Grid { rank, extents: [1; MAX_RANK], spacing: [1.0; MAX_RANK], origin: [0.0; MAX_RANK] };
        for a in 0..rank {
            if extents[a] < 8 || extents[a] % 2 != 0 {
                return Err(invalid(format!("extent on axis {a} must be even and >= 8, got {}", extents[a])));
            }
            if !(spacing[a].is_finite() && spacing[a] > 0.0) {
                return Err(invalid(format!("spacing on axis {a} must be > 0, got {}", spacing[a])));
            }
            if !origin[a].is_finite() {
                return Err(invalid(format!("origin on axis {a} is not finite")));
            }
            g.extents[a] = extents[a];
            g.spacing[a] = spacing[a];
            g.origin[a] = origin[a];
        }
        Ok(g)
    }

    /// Grid covering `[-L/2, L/2)` on every axis.
    pub fn centered(extents: &[usize], lengths: &[f64]) -> Result<Self> {
        if extents.len() != lengths.len() {
            return Err(invalid("extents and lengths must have equal length"));
        }
        let spacing: Vec<f64> = extents.iter().zip(lengths).map(|(&n, &l)| l / n as f64).collect();
        let origin: Vec<f64> = lengths.iter().map(|l| -l / 2.0).collect();
        Self::new(extents, &spacing, &origin)
    }

    /// Same extents, spacing from the stored values, origin at `-L/2`.
    pub fn centered_from_spacing(extents: &[usize], spacing: &[f64]) -> Result<Self> {
        let origin: Vec<f64> = extents.iter().zip(spacing).map(|(&n, &h)| -(n as f64) * h / 2.0).collect();
        Self::new(extents, spacing, &origin)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.rank]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.rank]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.rank]
    }

    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.extents[axis] as f64 * self.spacing[axis]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Distance between consecutive flat indices along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.extents[axis + 1..self.rank].iter().product()
    }

    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        self.origin[axis] + index as f64 * self.spacing[axis]
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.extents[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_RANK] {
        let mut idx = [0; MAX_RANK];
        for a in (0..self.rank).rev() {
            idx[a] = flat % self.extents[a];
            flat /= self.extents[a];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in 0..self.rank {
            flat = flat * self.extents[a] + idx[a];
        }
        flat
    }

    /// Flat index after a periodic shift of `idx` by `offset` along `axis`.
    pub fn shifted(&self, idx: &[usize; MAX_RANK], axis: usize, offset: isize) -> usize {
        let mut j = *idx;
        let n = self.extents[axis] as isize;
        j[axis] = (idx[axis] as isize + offset).rem_euclid(n) as usize;
        self.ravel(&j[..self.rank])
    }

    pub fn position(&self, flat: usize) -> [f64; MAX_RANK] {
        let idx = self.unravel(flat);
        let mut x = [0.0; MAX_RANK];
        for a in 0..self.rank {
            x[a] = self.coord(a, idx[a]);
        }
        x
    }

    /// Angular wavenumber of DFT bin `j` on `axis` (negative frequencies in the upper half).
    pub fn wavenumber(&self, axis: usize, j: usize) -> f64 {
        let n = self.extents[axis];
        let f = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * PI * f / self.length(axis)
    }

    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        (0..self.extents[axis]).map(|j| self.wavenumber(axis, j)).collect()
    }

    /// Nyquist wavenumber `pi / dx` on `axis`.
    pub fn k_nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing[axis]
    }

    /// Largest `|k|^2` represented on the grid.
    pub fn k_max_sq(&self) -> f64 {
        (0..self.rank).map(|a| self.k_nyquist(a).powi(2)).sum()
    }

    /// True when `k` is an integer multiple of `2 pi / L` along `axis`.
    pub fn on_reciprocal_lattice(&self, axis: usize, k: f64) -> bool {
        let j = k * self.length(axis) / (2.0 * PI);
        (j - j.round()).abs() < 1e-9 * (1.0 + j.abs())
    }

    /// Wrap a coordinate into `[origin, origin + L)`.
    pub fn wrap_coord(&self, axis: usize, x: f64) -> f64 {
        let l = self.length(axis);
        self.origin[axis] + (x - self.origin[axis]).rem_euclid(l)
    }

    /// Minimum-image displacement along `axis`.
    pub fn min_image(&self, axis: usize, dx: f64) -> f64 {
        let l = self.length(axis);
        dx - l * (dx / l).round()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.rank == other.rank
            && self.extents == other.extents
            && (0..self.rank).all(|a| {
                (self.spacing[a] - other.spacing[a]).abs() <= 1e-12 * self.spacing[a]
                    && (self.origin[a] - other.origin[a]).abs() <= 1e-12 * self.length(a)
            })
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.extents(), other.extents())))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for {} cells", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Sample `f` at every grid point; unused coordinates are zero.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; MAX_RANK]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Riemann sum over the periodic cell.
    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for {} cells", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; MAX_RANK]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn density(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|z| z.norm_sqr()).collect() }
    }

    /// `sum |psi|^2 dV`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescale so that `sum |psi|^2 dV = target`.
    pub fn normalize_to(&mut self, target: f64) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let s = (target / n).sqrt();
        self.values.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn relative_l2(&self, other: &ComplexField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let num: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = other.values.iter().map(|b| b.norm_sqr()).sum();
        if den == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok((num / den).sqrt())
    }
}

/// Relative L2 distance between two real fields.
pub fn relative_l2(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.values.iter().map(|y| y * y).sum();
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((num / den).sqrt())
}
