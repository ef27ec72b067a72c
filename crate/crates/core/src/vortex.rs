//! Irrotational point-vortex fields in the plane (axes 0 and 1): phase,
//! density profile, circulation, drift superposition and rest frequency.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fluid::apply_floor;
use crate::grid::{ComplexField, Grid, ScalarField};
use crate::params::{CharacteristicScales, PhysicalParams};

/// Radial density model of a vortex core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileModel {
    /// `rho_ref r^2 / (r^2 + 2 xi^2)`.
    #[default]
    GpLike,
    /// `rho_ref (1 - depth e^{-r^2 / 2 width^2})`.
    GaussianDimple { depth: f64, width: f64 },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSpec {
    pub center: [f64; 2],
    pub n: i32,
    /// Core length `xi`; `None` uses `xi_plus`.
    #[serde(default)]
    pub core_radius: Option<f64>,
    #[serde(default)]
    pub profile: ProfileModel,
}

impl VortexSpec {
    pub fn new(center: [f64; 2], n: i32) -> Self {
        Self { center, n, core_radius: None, profile: ProfileModel::GpLike }
    }

    /// Specific angular momentum `n hbar / m`.
    pub fn ell(&self, params: &PhysicalParams) -> f64 {
        self.n as f64 * params.hbar_over_m()
    }

    /// `2 pi n hbar / m`.
    pub fn circulation(&self, params: &PhysicalParams) -> f64 {
        2.0 * PI * self.ell(params)
    }

    pub fn core(&self, scales: &CharacteristicScales) -> f64 {
        self.core_radius.unwrap_or(scales.xi_plus)
    }

    /// Centre actually used on `grid`: shifted by half a cell on both axes
    /// when it falls on a node.
    pub fn effective_center(&self, grid: &Grid) -> [f64; 2] {
        let h = grid.spacing();
        let o = grid.origin();
        let on_node = (0..2).all(|a| {
            let s = (self.center[a] - o[a]) / h[a];
            (s - s.round()).abs() < 1e-9
        });
        if on_node {
            [self.center[0] + 0.5 * h[0], self.center[1] + 0.5 * h[1]]
        } else {
            self.center
        }
    }
}

fn require_plane(grid: &Grid) -> Result<()> {
    if grid.rank() < 2 {
        return Err(invalid("vortex fields need a grid of rank >= 2"));
    }
    Ok(())
}

pub(crate) fn wrap_pi(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Principal branch of `n atan2(y - y_c, x - x_c)`, summed over vortices.
pub fn vortex_phase(grid: &Grid, specs: &[VortexSpec]) -> Result<ScalarField> {
    require_plane(grid)?;
    let centers: Vec<[f64; 2]> = specs.iter().map(|s| s.effective_center(grid)).collect();
    Ok(ScalarField::from_fn(*grid, |x| {
        let raw: f64 = specs
            .iter()
            .zip(&centers)
            .map(|(s, c)| s.n as f64 * (x[1] - c[1]).atan2(x[0] - c[0]))
            .sum();
        wrap_pi(raw)
    }))
}

/// `Phi_c = (hbar/m) theta_c`.
pub fn vortex_potential(grid: &Grid, specs: &[VortexSpec], params: &PhysicalParams) -> Result<ScalarField> {
    let s = params.hbar_over_m();
    Ok(vortex_phase(grid, specs)?.map(|t| t * s))
}

/// Single-vortex profile value at radius `r`.
pub fn profile_density(spec: &VortexSpec, scales: &CharacteristicScales, rho_ref: f64, r: f64) -> f64 {
    match spec.profile {
        ProfileModel::GpLike => {
            let xi = spec.core(scales);
            rho_ref * r * r / (r * r + 2.0 * xi * xi)
        }
        ProfileModel::GaussianDimple { depth, width } => rho_ref * (1.0 - depth * (-r * r / (2.0 * width * width)).exp()),
        ProfileModel::Uniform => rho_ref,
    }
}

/// Product of the single-vortex profiles (relative to `rho_ref`), floored,
/// centred where `vortex_phase` puts the singularity.
pub fn vortex_density(grid: &Grid, specs: &[VortexSpec], params: &PhysicalParams) -> Result<ScalarField> {
    require_plane(grid)?;
    let scales = params.scales();
    for s in specs {
        if let ProfileModel::GaussianDimple { depth, width } = s.profile {
            if !(0.0..=1.0).contains(&depth) || !(width > 0.0) {
                return Err(invalid("gaussian dimple needs 0 <= depth <= 1 and width > 0"));
            }
        }
        if let Some(xi) = s.core_radius {
            if !(xi > 0.0) {
                return Err(invalid("core radius must be > 0"));
            }
        }
    }
    let centers: Vec<[f64; 2]> = specs.iter().map(|s| s.effective_center(grid)).collect();
    let mut rho = ScalarField::from_fn(*grid, |x| {
        specs.iter().zip(&centers).fold(params.rho_ref, |acc, (s, c)| {
            let r = (x[0] - c[0]).hypot(x[1] - c[1]);
            acc * profile_density(s, &scales, 1.0, r)
        })
    });
    apply_floor(&mut rho.values, params.rho_floor());
    Ok(rho)
}

/// `sqrt(rho) e^{i theta}` for a set of vortices.
pub fn vortex_wavefunction(grid: &Grid, specs: &[VortexSpec], params: &PhysicalParams) -> Result<ComplexField> {
    let rho = vortex_density(grid, specs, params)?;
    let theta = vortex_phase(grid, specs)?;
    crate::fluid::madelung_compose(&rho, &theta)
}

/// Closed polyline of grid nodes in the plane; consecutive vertices
/// (cyclically) are one cell apart along one axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLoop {
    pub vertices: Vec<[usize; 2]>,
}

impl GridLoop {
    pub fn new(grid: &Grid, vertices: Vec<[usize; 2]>) -> Result<Self> {
        require_plane(grid)?;
        if vertices.len() < 4 {
            return Err(invalid("a loop needs at least 4 vertices"));
        }
        let ext = grid.extents();
        for (k, v) in vertices.iter().enumerate() {
            if v[0] >= ext[0] || v[1] >= ext[1] {
                return Err(invalid(format!("loop vertex {k} outside the grid")));
            }
            let w = vertices[(k + 1) % vertices.len()];
            let steps: Vec<usize> = (0..2)
                .map(|a| {
                    let d = (w[a] + ext[a] - v[a]) % ext[a];
                    d.min(ext[a] - d)
                })
                .collect();
            if steps[0] + steps[1] != 1 {
                return Err(invalid(format!("loop vertices {k} and {} are not neighbours", (k + 1) % vertices.len())));
            }
        }
        Ok(Self { vertices })
    }

    /// Counter-clockwise boundary of the index box `[lo, hi]`.
    pub fn rectangle(grid: &Grid, lo: [usize; 2], hi: [usize; 2]) -> Result<Self> {
        if hi[0] <= lo[0] || hi[1] <= lo[1] {
            return Err(invalid("rectangle needs hi > lo on both axes"));
        }
        let mut v = Vec::new();
        for i in lo[0]..hi[0] {
            v.push([i, lo[1]]);
        }
        for j in lo[1]..hi[1] {
            v.push([hi[0], j]);
        }
        for i in (lo[0] + 1..=hi[0]).rev() {
            v.push([i, hi[1]]);
        }
        for j in (lo[1] + 1..=hi[1]).rev() {
            v.push([lo[0], j]);
        }
        Self::new(grid, v)
    }

    /// Counter-clockwise staircase approximation of a circle.
    pub fn circle(grid: &Grid, center: [f64; 2], radius: f64) -> Result<Self> {
        require_plane(grid)?;
        let h = grid.spacing();
        let o = grid.origin();
        let cells = radius / h[0].min(h[1]);
        if !(cells >= 2.0) {
            return Err(invalid("circle radius must span at least 2 cells"));
        }
        let ext = grid.extents();
        let snap = |phi: f64| -> Result<[usize; 2]> {
            let mut idx = [0usize; 2];
            for a in 0..2 {
                let x = center[a] + radius * if a == 0 { phi.cos() } else { phi.sin() };
                let i = ((x - o[a]) / h[a]).round();
                if i < 0.0 || i >= ext[a] as f64 {
                    return Err(invalid("circle leaves the grid"));
                }
                idx[a] = i as usize;
            }
            Ok(idx)
        };
        let samples = (64.0 * cells).ceil() as usize;
        let mut v: Vec<[usize; 2]> = Vec::new();
        for s in 0..samples {
            let p = snap(2.0 * PI * s as f64 / samples as f64)?;
            if let Some(&last) = v.last() {
                if last == p {
                    continue;
                }
                if last[0] != p[0] && last[1] != p[1] {
                    v.push([p[0], last[1]]);
                }
            }
            v.push(p);
        }
        let (first, last) = (v[0], *v.last().unwrap());
        if first == last {
            v.pop();
        } else if first[0] != last[0] && first[1] != last[1] {
            v.push([first[0], last[1]]);
        }
        Self::new(grid, v)
    }

    /// Square of half-side `half_cells` about the node nearest `center`.
    pub fn square(grid: &Grid, center: [f64; 2], half_cells: usize) -> Result<Self> {
        let mut lo = [0usize; 2];
        let mut hi = [0usize; 2];
        for a in 0..2 {
            let c = ((center[a] - grid.origin()[a]) / grid.spacing()[a]).round() as i64;
            let (l, u) = (c - half_cells as i64, c + half_cells as i64);
            if l < 0 || u >= grid.extents()[a] as i64 {
                return Err(invalid("square leaves the grid"));
            }
            lo[a] = l as usize;
            hi[a] = u as usize;
        }
        Self::rectangle(grid, lo, hi)
    }
}

/// Minimum distance, in cells, allowed between a loop vertex and a core.
pub const CORE_EXCLUSION_CELLS: f64 = 2.0;

/// Field a circulation is measured from.
#[derive(Debug, Clone, Copy)]
pub enum LoopField<'a> {
    /// Principal-branch phase `theta`; edges add wrapped differences.
    Phase(&'a ScalarField),
    /// Velocity components; edges use the trapezoid rule.
    Velocity(&'a [ScalarField]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circulation {
    pub gamma: f64,
    /// `gamma m / (2 pi hbar)`.
    pub quanta: f64,
    pub winding: i64,
}

/// Line integral of the velocity around `lp`.
pub fn circulation(field: LoopField<'_>, lp: &GridLoop, cores: &[[f64; 2]], params: &PhysicalParams) -> Result<Circulation> {
    let grid = match field {
        LoopField::Phase(t) => t.grid,
        LoopField::Velocity(v) => {
            if v.len() < 2 {
                return Err(invalid("velocity needs two components"));
            }
            v[0].grid.ensure_same(&v[1].grid)?;
            v[0].grid
        }
    };
    require_plane(&grid)?;
    let h = grid.spacing();
    let flat = |v: [usize; 2]| {
        let mut idx = [0usize; 3];
        idx[0] = v[0];
        idx[1] = v[1];
        grid.ravel(&idx[..grid.rank()])
    };
    for (k, v) in lp.vertices.iter().enumerate() {
        let x = [grid.coord(0, v[0]), grid.coord(1, v[1])];
        for c in cores {
            let d = (grid.min_image(0, x[0] - c[0]) / h[0]).hypot(grid.min_image(1, x[1] - c[1]) / h[1]);
            if d <= CORE_EXCLUSION_CELLS {
                return Err(Error::LoopTouchesCore { vertex: k, min_cells: CORE_EXCLUSION_CELLS });
            }
        }
    }
    let nv = lp.vertices.len();
    let mut gamma = 0.0;
    for k in 0..nv {
        let (a, b) = (lp.vertices[k], lp.vertices[(k + 1) % nv]);
        let (ia, ib) = (flat(a), flat(b));
        match field {
            LoopField::Phase(t) => gamma += wrap_pi(t.values[ib] - t.values[ia]) * params.hbar_over_m(),
            LoopField::Velocity(v) => {
                let axis = if a[0] != b[0] { 0 } else { 1 };
                let step = grid.min_image(axis, grid.coord(axis, b[axis]) - grid.coord(axis, a[axis]));
                gamma += 0.5 * (v[axis].values[ia] + v[axis].values[ib]) * step;
            }
        }
    }
    let quanta = gamma / (2.0 * PI * params.hbar_over_m());
    Ok(Circulation { gamma, quanta, winding: quanta.round() as i64 })
}

/// Plaquette curl of the staggered velocity `(hbar/m) wrap(d theta) / h`:
/// the circulation around each cell divided by its area, stored at the
/// cell's lower corner. Cells holding a core carry `2 pi n hbar / (m dA)`.
pub fn discrete_curl(theta: &ScalarField, params: &PhysicalParams) -> Result<ScalarField> {
    let grid = theta.grid;
    require_plane(&grid)?;
    let area = grid.spacing()[0] * grid.spacing()[1];
    let s = params.hbar_over_m() / area;
    let values = (0..grid.len())
        .map(|i| {
            let idx = grid.unravel(i);
            let i10 = grid.shifted(&idx, 0, 1);
            let i01 = grid.shifted(&idx, 1, 1);
            let i11 = grid.shifted(&grid.unravel(i10), 1, 1);
            let t = &theta.values;
            s * (wrap_pi(t[i10] - t[i]) + wrap_pi(t[i11] - t[i10]) + wrap_pi(t[i01] - t[i11]) + wrap_pi(t[i] - t[i01]))
        })
        .collect();
    Ok(ScalarField { grid, values })
}

/// Uniform drift of speed `v_d` along axis 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftSpec {
    pub v_d: f64,
    /// Mach number `v_d / c`.
    pub mach: f64,
    /// `m v_d / hbar`.
    pub k_k: f64,
    /// `m v_d^2 / 2 hbar`.
    pub omega_k: f64,
    /// `h / (m v_d)`; infinite at rest.
    pub lambda_db: f64,
    /// `m v_d`.
    pub momentum: f64,
}

impl DriftSpec {
    pub fn new(v_d: f64, params: &PhysicalParams) -> Result<Self> {
        if !v_d.is_finite() {
            return Err(invalid("drift speed must be finite"));
        }
        let PhysicalParams { hbar, m, c, .. } = *params;
        Ok(Self {
            v_d,
            mach: v_d / c,
            k_k: m * v_d / hbar,
            omega_k: 0.5 * m * v_d * v_d / hbar,
            lambda_db: if v_d == 0.0 { f64::INFINITY } else { params.planck() / (m * v_d) },
            momentum: m * v_d,
        })
    }

    /// The grid-periodic drift with `j` phase turns across axis 0.
    pub fn periodic(grid: &Grid, j: i32, params: &PhysicalParams) -> Result<Self> {
        Self::new(params.hbar_over_m() * 2.0 * PI * j as f64 / grid.length(0), params)
    }

    pub fn is_periodic_on(&self, grid: &Grid) -> bool {
        grid.on_reciprocal_lattice(0, self.k_k)
    }
}

fn ensure_periodic(grid: &Grid, drift: &DriftSpec) -> Result<()> {
    if drift.is_periodic_on(grid) {
        Ok(())
    } else {
        Err(invalid(format!("drift wavenumber {} is not a multiple of 2 pi / L", drift.k_k)))
    }
}

/// `Phi_c + v_d x - v_d^2 t / 2`.
pub fn add_drift(phi_c: &ScalarField, drift: &DriftSpec, t: f64) -> Result<ScalarField> {
    let grid = phi_c.grid;
    ensure_periodic(&grid, drift)?;
    let values = (0..grid.len())
        .map(|i| phi_c.values[i] + drift.v_d * grid.position(i)[0] - 0.5 * drift.v_d * drift.v_d * t)
        .collect();
    Ok(ScalarField { grid, values })
}

/// Principal branch of `theta_c + k_k x - omega_k t`.
pub fn add_drift_phase(theta_c: &ScalarField, drift: &DriftSpec, t: f64) -> Result<ScalarField> {
    let grid = theta_c.grid;
    ensure_periodic(&grid, drift)?;
    let values = (0..grid.len())
        .map(|i| wrap_pi(theta_c.values[i] + drift.k_k * grid.position(i)[0] - drift.omega_k * t))
        .collect();
    Ok(ScalarField { grid, values })
}

/// Mean distance between successive strict local maxima of a sampled
/// periodic signal, refined to sub-cell accuracy by a parabola through each
/// maximum and its neighbours.
pub fn maxima_spacing(samples: &[f64], dx: f64) -> Option<f64> {
    let n = samples.len();
    let mut peaks = Vec::new();
    for i in 0..n {
        let (l, c, r) = (samples[(i + n - 1) % n], samples[i], samples[(i + 1) % n]);
        if c > l && c >= r {
            let curv = l - 2.0 * c + r;
            let off = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
            peaks.push((i as f64 + off) * dx);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestFrequency {
    /// `ell / r^2`.
    pub omega: f64,
    /// `hbar omega`.
    pub energy: f64,
    /// `m c^2`.
    pub rest_energy: f64,
}

/// Rotation frequency of the vortex flow at radius `r`.
pub fn rest_frequency(spec: &VortexSpec, params: &PhysicalParams, r: f64) -> Result<RestFrequency> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be > 0, got {r}")));
    }
    let omega = spec.ell(params) / (r * r);
    Ok(RestFrequency { omega, energy: params.hbar * omega, rest_energy: params.m * params.c * params.c })
}
