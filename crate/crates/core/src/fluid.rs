//! Isothermal equation of state, Madelung transform, Bohm potential and the
//! Korteweg capillary stress.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, ScalarField};
use crate::params::PhysicalParams;
use crate::spectral::Spectral;

/// Isothermal pressure `P = rho c^2`.
pub fn eos_pressure(rho: f64, params: &PhysicalParams) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("density must be >= 0, got {rho}")));
    }
    Ok(rho * params.c * params.c)
}

/// Pressure energy `P u = rho u c^2` held in a volume `u`.
pub fn pressure_energy(rho: f64, volume: f64, params: &PhysicalParams) -> Result<f64> {
    Ok(eos_pressure(rho, params)? * volume)
}

/// Specific enthalpy `h = c^2 ln(rho / rho_ref)`, the antiderivative of
/// `(1/rho) dP` for `P = rho c^2` with `h(rho_ref) = 0`.
pub fn enthalpy(rho: &ScalarField, params: &PhysicalParams) -> Result<ScalarField> {
    if let Some((cell, &value)) = rho.values.iter().enumerate().find(|(_, &r)| !(r > 0.0)) {
        return Err(Error::NonPositiveDensity { cell, value });
    }
    let c2 = params.c * params.c;
    Ok(rho.map(|r| c2 * (r / params.rho_ref).ln()))
}

/// Density and unwrapped phase of a complex field.
#[derive(Debug, Clone)]
pub struct MadelungPair {
    pub rho: ScalarField,
    pub theta: ScalarField,
    /// Cells with `|psi|^2 <= rho_floor`; their phase is carried from the
    /// sweep predecessor rather than measured.
    pub floored_cells: usize,
}

/// Split `psi = sqrt(rho) e^{i theta}`.
///
/// The phase is unwrapped along a row-major sweep: each cell takes the
/// branch nearest its predecessor on the fastest axis (or, at the start of a
/// row, the start of the previous row). A residual jump above pi to any
/// already-visited neighbour on a slower axis is reported as an unwrap
/// failure; that happens around vortices, whose multivalued phase belongs to
/// the winding-number tools instead.
pub fn madelung_decompose(psi: &ComplexField, rho_floor: f64) -> Result<MadelungPair> {
    let grid = psi.grid;
    let rank = grid.rank();
    let n = grid.len();
    let rho: Vec<f64> = psi.values.iter().map(|z| z.norm_sqr()).collect();
    let mut theta = vec![0.0; n];
    let mut floored_cells = 0;
    for i in 0..n {
        let idx = grid.unravel(i);
        let live = rho[i] > rho_floor;
        if !live {
            floored_cells += 1;
        }
        // sweep predecessor: the last axis with a nonzero index
        let reference = (0..rank).rev().find(|&a| idx[a] > 0).map(|a| {
            let mut j = idx;
            j[a] -= 1;
            for b in a + 1..rank {
                j[b] = 0;
            }
            theta[grid.ravel(&j[..rank])]
        });
        let raw = psi.values[i].arg();
        theta[i] = match (reference, live) {
            (Some(r), true) => raw + 2.0 * PI * ((r - raw) / (2.0 * PI)).round(),
            (Some(r), false) => r,
            (None, _) => raw,
        };
        if live {
            for a in 0..rank.saturating_sub(1) {
                if idx[a] == 0 {
                    continue;
                }
                let mut j = idx;
                j[a] -= 1;
                let nb = grid.ravel(&j[..rank]);
                if rho[nb] > rho_floor {
                    let jump = (theta[i] - theta[nb]).abs();
                    if jump > PI {
                        return Err(Error::UnwrapFailure { cell: i, jump });
                    }
                }
            }
        }
    }
    Ok(MadelungPair {
        rho: ScalarField { grid, values: rho },
        theta: ScalarField { grid, values: theta },
        floored_cells,
    })
}

/// `psi = sqrt(rho) e^{i theta}`.
pub fn madelung_compose(rho: &ScalarField, theta: &ScalarField) -> Result<ComplexField> {
    rho.grid.ensure_same(&theta.grid)?;
    let values = rho
        .values
        .iter()
        .zip(&theta.values)
        .map(|(&r, &t)| Complex64::from_polar(r.max(0.0).sqrt(), t))
        .collect();
    Ok(ComplexField { grid: rho.grid, values })
}

/// Clamp a density field to `floor`, returning the number of clamped cells.
pub(crate) fn apply_floor(values: &mut [f64], floor: f64) -> usize {
    let mut count = 0;
    for v in values.iter_mut() {
        if *v < floor {
            *v = floor;
            count += 1;
        }
    }
    count
}

/// `(lap sqrt(rho)) / sqrt(rho)` computed spectrally, with the floor applied.
pub(crate) fn sqrt_rho_curvature(sp: &Spectral, rho: &[f64], floor: f64) -> (Vec<f64>, usize) {
    let mut r = rho.to_vec();
    let floored = apply_floor(&mut r, floor);
    let s: Vec<f64> = r.iter().map(|x| x.sqrt()).collect();
    let lap = sp.laplacian(&s);
    (lap.iter().zip(&s).map(|(l, s)| l / s).collect(), floored)
}

#[derive(Debug, Clone)]
pub struct BohmPotential {
    pub q: ScalarField,
    /// Cells raised to the density floor before evaluation.
    pub floored_cells: usize,
}

/// Bohm potential `Q = -(hbar^2 / 2m) (lap sqrt(rho)) / sqrt(rho)`.
pub fn bohm_potential(rho: &ScalarField, params: &PhysicalParams) -> BohmPotential {
    let sp = Spectral::new(&rho.grid);
    bohm_potential_with(&sp, rho, params)
}

pub fn bohm_potential_with(sp: &Spectral, rho: &ScalarField, params: &PhysicalParams) -> BohmPotential {
    let (curv, floored_cells) = sqrt_rho_curvature(sp, &rho.values, params.rho_floor());
    let pref = -params.hbar * params.hbar / (2.0 * params.m);
    BohmPotential {
        q: ScalarField { grid: rho.grid, values: curv.into_iter().map(|c| pref * c).collect() },
        floored_cells,
    }
}

/// Korteweg force per unit mass, `-(1/m) grad Q`.
pub fn korteweg_force(rho: &ScalarField, params: &PhysicalParams) -> Vec<ScalarField> {
    let sp = Spectral::new(&rho.grid);
    let q = bohm_potential_with(&sp, rho, params).q;
    sp.gradient(&q.values)
        .into_iter()
        .map(|g| ScalarField { grid: rho.grid, values: g.into_iter().map(|v| -v / params.m).collect() })
        .collect()
}

/// `(1/rho) div sigma^K` evaluated from the stress tensor itself,
/// `sigma_ij = [rho div(K grad rho) + (K - rho K')|grad rho|^2 / 2] delta_ij - K d_i rho d_j rho`
/// with `K = kappa / rho`. Independent of the Bohm-potential route.
pub fn korteweg_stress_divergence(rho: &ScalarField, kappa: f64) -> Result<Vec<ScalarField>> {
    if let Some((cell, &value)) = rho.values.iter().enumerate().find(|(_, &r)| !(r > 0.0)) {
        return Err(Error::NonPositiveDensity { cell, value });
    }
    let grid = rho.grid;
    let rank = grid.rank();
    let sp = Spectral::new(&grid);
    let n = grid.len();
    let grad = sp.gradient(&rho.values);
    let k: Vec<f64> = rho.values.iter().map(|r| kappa / r).collect();
    let dk: Vec<f64> = rho.values.iter().map(|r| -kappa / (r * r)).collect();
    let flux: Vec<Vec<f64>> = grad.iter().map(|g| g.iter().zip(&k).map(|(g, k)| g * k).collect()).collect();
    let div_flux = sp.divergence(&flux);
    let grad_sq: Vec<f64> = (0..n).map(|i| grad.iter().map(|g| g[i] * g[i]).sum()).collect();
    let iso: Vec<f64> = (0..n)
        .map(|i| rho.values[i] * div_flux[i] + 0.5 * (k[i] - rho.values[i] * dk[i]) * grad_sq[i])
        .collect();
    let mut out = Vec::with_capacity(rank);
    for i_ax in 0..rank {
        // row i of sigma, then its divergence
        let row: Vec<Vec<f64>> = (0..rank)
            .map(|j_ax| {
                (0..n)
                    .map(|c| {
                        let diag = if i_ax == j_ax { iso[c] } else { 0.0 };
                        diag - k[c] * grad[i_ax][c] * grad[j_ax][c]
                    })
                    .collect()
            })
            .collect();
        let div = sp.divergence(&row);
        out.push(ScalarField { grid, values: div.iter().zip(&rho.values).map(|(d, r)| d / r).collect() });
    }
    Ok(out)
}

/// L-infinity residual of
/// `lap sqrt(rho) / sqrt(rho) = lap rho / (2 rho) - |grad rho|^2 / (4 rho^2)`.
pub fn bohm_identity_residual(rho: &ScalarField) -> Result<f64> {
    if let Some((cell, &value)) = rho.values.iter().enumerate().find(|(_, &r)| !(r > 0.0)) {
        return Err(Error::NonPositiveDensity { cell, value });
    }
    let sp = Spectral::new(&rho.grid);
    let (lhs, _) = sqrt_rho_curvature(&sp, &rho.values, 0.0);
    let lap = sp.laplacian(&rho.values);
    let grad = sp.gradient(&rho.values);
    let mut worst: f64 = 0.0;
    for i in 0..rho.values.len() {
        let r = rho.values[i];
        let g2: f64 = grad.iter().map(|g| g[i] * g[i]).sum();
        let rhs = lap[i] / (2.0 * r) - g2 / (4.0 * r * r);
        worst = worst.max((lhs[i] - rhs).abs());
    }
    Ok(worst)
}

/// Energy bookkeeping for a hydrodynamic state.
#[derive(Debug, Clone)]
pub struct EnergyDiagnostics {
    /// Specific energy `eps = |grad Phi|^2/2 + h - (hbar^2/2m^2) lap sqrt(rho)/sqrt(rho) + V/m`.
    pub epsilon_field: ScalarField,
    /// `H = m eps` per cell.
    pub hamiltonian_field: ScalarField,
    /// Total energy `sum rho eps dV`.
    pub hamiltonian: f64,
    /// Action `S = m Phi`.
    pub action_field: ScalarField,
    /// `m c^2`.
    pub rest_energy: f64,
    /// Pressure energy of the whole cell, `c^2 sum rho dV`.
    pub pressure_energy: f64,
    /// Largest `|dPhi/dt + eps|` off the floored cells, from a centred
    /// difference over two solver steps; `None` if not requested.
    pub phi_rate_residual: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn natural() -> PhysicalParams {
        PhysicalParams::natural()
    }

    #[test]
    fn pressure_values() {
        let p = natural();
        assert_eq!(eos_pressure(0.0, &p).unwrap(), 0.0);
        assert_eq!(eos_pressure(1.0, &p).unwrap(), 1.0);
        let p3 = PhysicalParams::new(1.0, 1.0, 3.0, 1.0).unwrap();
        assert_eq!(eos_pressure(2.0, &p3).unwrap(), 18.0);
        assert!(eos_pressure(-1.0, &p).is_err());
        assert_eq!(pressure_energy(2.0, 0.5, &p3).unwrap(), 9.0);
    }

    #[test]
    fn enthalpy_values() {
        let g = Grid::centered(&[8], &[1.0]).unwrap();
        let p = natural();
        let h = enthalpy(&ScalarField::constant(g, 1.0), &p).unwrap();
        assert!(h.values.iter().all(|&v| v == 0.0));
        let h = enthalpy(&ScalarField::constant(g, std::f64::consts::E), &p).unwrap();
        assert!(h.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let mut bad = ScalarField::constant(g, 1.0);
        bad.values[5] = 0.0;
        match enthalpy(&bad, &p) {
            Err(Error::NonPositiveDensity { cell, .. }) => assert_eq!(cell, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decompose_uniform() {
        let g = Grid::centered(&[8, 8], &[1.0, 1.0]).unwrap();
        let one = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let m = madelung_decompose(&one, 1e-12).unwrap();
        assert!(m.rho.values.iter().all(|&r| r == 1.0));
        assert!(m.theta.values.iter().all(|&t| t == 0.0));
        let two_i = ComplexField::from_fn(g, |_| Complex64::new(0.0, 2.0));
        let m = madelung_decompose(&two_i, 1e-12).unwrap();
        assert!(m.rho.values.iter().all(|&r| (r - 4.0).abs() < 1e-15));
        assert!(m.theta.values.iter().all(|&t| (t - PI / 2.0).abs() < 1e-15));
    }

    #[test]
    fn decompose_unwraps_ramp() {
        let g = Grid::centered(&[64], &[64.0]).unwrap();
        let psi = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 0.9 * x[0]));
        let m = madelung_decompose(&psi, 1e-12).unwrap();
        for w in m.theta.values.windows(2) {
            assert!((w[1] - w[0] - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_rejects_vortex() {
        let g = Grid::centered(&[16, 16], &[16.0, 16.0]).unwrap();
        let psi = ComplexField::from_fn(g, |x| Complex64::new(x[0] + 0.5, x[1] + 0.5));
        assert!(matches!(madelung_decompose(&psi, 1e-12), Err(Error::UnwrapFailure { .. })));
    }

    #[test]
    fn bohm_of_constant_is_zero() {
        let g = Grid::centered(&[16, 16], &[3.0, 5.0]).unwrap();
        let q = bohm_potential(&ScalarField::constant(g, 2.5), &natural());
        assert_eq!(q.floored_cells, 0);
        assert!(q.q.max_abs() < 1e-13);
    }

    #[test]
    fn bohm_gaussian_centre() {
        // rho = exp(-x^2 / 2 s^2): Q = -(1/2)(x^2/(4 s^4) - 1/(2 s^2)), Q(0) = 1/4 for s = 1.
        let g = Grid::centered(&[256], &[40.0]).unwrap();
        let rho = ScalarField::from_fn(g, |x| (-x[0] * x[0] / 2.0).exp());
        let q = bohm_potential(&rho, &natural());
        let centre = g.extents()[0] / 2;
        assert!((g.coord(0, centre)).abs() < 1e-15);
        assert!((q.q.values[centre] - 0.25).abs() < 1e-9, "{}", q.q.values[centre]);
        // the floored tails perturb Q by ~1e-12 / sqrt(rho); stay within |x| <= 3
        for i in 109..148 {
            let x = g.coord(0, i);
            let want = -0.5 * (x * x / 4.0 - 0.5);
            assert!((q.q.values[i] - want).abs() < 1e-8);
        }
    }

    #[test]
    fn bohm_linear_response() {
        // rho = 1 + e cos(kx): Q ~ (hbar^2 k^2 / 4m) e cos(kx) + O(e^2)
        let g = Grid::centered(&[64], &[2.0 * PI]).unwrap();
        let eps = 1e-4;
        let rho = ScalarField::from_fn(g, |x| 1.0 + eps * (2.0 * x[0]).cos());
        let q = bohm_potential(&rho, &natural());
        for i in 0..64 {
            let want = eps * (2.0 * g.coord(0, i)).cos();
            assert!((q.q.values[i] - want).abs() < 4.0 * eps * eps);
        }
    }

    fn band_limited_density(g: Grid) -> ScalarField {
        ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].cos() + 0.2 * (2.0 * x[1]).sin() + 0.1 * (x[0] + x[1]).cos())
    }

    #[test]
    fn curvature_identity() {
        let g = Grid::centered(&[64, 64], &[2.0 * PI, 2.0 * PI]).unwrap();
        let res = bohm_identity_residual(&band_limited_density(g)).unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn stress_tensor_matches_bohm_force() {
        let g = Grid::centered(&[128, 128], &[2.0 * PI, 2.0 * PI]).unwrap();
        let p = natural();
        let rho = band_limited_density(g);
        let via_q = korteweg_force(&rho, &p);
        let via_sigma = korteweg_stress_divergence(&rho, p.scales().kappa).unwrap();
        for (a, b) in via_q.iter().zip(&via_sigma) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn enthalpy_gradient_matches_finite_difference_of_pressure() {
        // grad h spectral vs c^2 (grad rho)/rho with a 10th-order finite-difference gradient.
        let g = Grid::centered(&[128], &[2.0 * PI]).unwrap();
        let p = PhysicalParams::new(1.0, 1.0, 1.7, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.4 * x[0].sin());
        let h = enthalpy(&rho, &p).unwrap();
        let dh = Spectral::new(&g).derivative(&h.values, 0);
        let n = 128;
        let dx = g.spacing()[0];
        let c = [5.0 / 6.0, -5.0 / 21.0, 5.0 / 84.0, -5.0 / 504.0, 1.0 / 1260.0];
        for i in 0..n {
            let mut drho = 0.0;
            for (j, cj) in c.iter().enumerate() {
                let j = j + 1;
                drho += cj * (rho.values[(i + j) % n] - rho.values[(i + n - j) % n]);
            }
            drho /= dx;
            let want = p.c * p.c * drho / rho.values[i];
            assert!((dh[i] - want).abs() < 1e-10, "{} vs {}", dh[i], want);
        }
    }
}
