//! Strang split-step Fourier solver for
//! `i hbar dpsi/dt = [-(hbar^2/2m) lap + V] psi` on a periodic grid, with
//! wave-packet observables.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexField, Grid, ScalarField};
use crate::params::PhysicalParams;
use crate::spectral::Spectral;

#[derive(Debug, Clone)]
pub struct SchrodingerConfig {
    pub params: PhysicalParams,
    pub grid: Grid,
    pub dt: f64,
    pub potential: ScalarField,
}

impl SchrodingerConfig {
    pub fn new(params: PhysicalParams, grid: Grid, dt: f64, potential: ScalarField) -> Result<Self> {
        let cfg = Self { params, grid, dt, potential };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn free(params: PhysicalParams, grid: Grid, dt: f64) -> Result<Self> {
        Self::new(params, grid, dt, ScalarField::zeros(grid))
    }

    /// Checks `dt > 0` and that both the potential and kinetic phase advanced
    /// per step stay below pi.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.ensure_same(&self.potential.grid)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        let pot = self.dt * self.potential.max_abs() / self.params.hbar;
        if pot >= PI {
            return Err(Error::Unresolved(format!("potential phase step {pot:.3} >= pi")));
        }
        let kin = self.kinetic_phase_step();
        if kin >= PI {
            return Err(Error::Unresolved(format!("kinetic phase step {kin:.3} >= pi")));
        }
        Ok(())
    }

    /// `dt hbar k_max^2 / 2m`.
    pub fn kinetic_phase_step(&self) -> f64 {
        self.dt * self.params.hbar * self.grid.k_max_sq() / (2.0 * self.params.m)
    }

    pub fn is_free(&self) -> bool {
        self.potential.values.iter().all(|&v| v == 0.0)
    }
}

/// Precomputed phase factors for repeated Strang steps.
#[derive(Debug, Clone)]
pub struct SplitStepper {
    grid: Grid,
    spectral: Spectral,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(cfg: &SchrodingerConfig) -> Result<Self> {
        cfg.validate()?;
        let spectral = Spectral::new(&cfg.grid);
        let PhysicalParams { hbar, m, .. } = cfg.params;
        let half_potential =
            cfg.potential.values.iter().map(|&v| Complex64::from_polar(1.0, -v * cfg.dt / (2.0 * hbar))).collect();
        let kinetic =
            spectral.k_sq().iter().map(|&k2| Complex64::from_polar(1.0, -hbar * k2 * cfg.dt / (2.0 * m))).collect();
        Ok(Self { grid: cfg.grid, spectral, half_potential, kinetic })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// One symmetric step in place.
    pub fn step(&self, psi: &mut [Complex64]) {
        psi.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
        self.spectral.forward(psi);
        psi.iter_mut().zip(&self.kinetic).for_each(|(z, p)| *z *= p);
        self.spectral.inverse(psi);
        psi.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
    }

    pub fn step_field(&self, psi: &mut ComplexField) -> Result<()> {
        self.grid.ensure_same(&psi.grid)?;
        self.step(&mut psi.values);
        Ok(())
    }
}

pub fn split_step(psi: &ComplexField, cfg: &SchrodingerConfig) -> Result<ComplexField> {
    cfg.grid.ensure_same(&psi.grid)?;
    let stepper = SplitStepper::new(cfg)?;
    let mut out = psi.clone();
    stepper.step(&mut out.values);
    Ok(out)
}

pub fn evolve(psi0: &ComplexField, cfg: &SchrodingerConfig, n_steps: usize) -> Result<ComplexField> {
    evolve_observed(psi0, cfg, n_steps, 0, |_, _, _| {})
}

/// Evolve `n_steps`, calling `observe(step, t, psi)` at step 0 and every
/// `every` steps after it (never when `every == 0`).
pub fn evolve_observed(
    psi0: &ComplexField,
    cfg: &SchrodingerConfig,
    n_steps: usize,
    every: usize,
    mut observe: impl FnMut(usize, f64, &ComplexField),
) -> Result<ComplexField> {
    cfg.grid.ensure_same(&psi0.grid)?;
    let mut psi = psi0.clone();
    if n_steps == 0 && every == 0 {
        return Ok(psi);
    }
    let stepper = SplitStepper::new(cfg)?;
    if every > 0 {
        observe(0, 0.0, &psi);
    }
    for s in 1..=n_steps {
        stepper.step(&mut psi.values);
        if every > 0 && s % every == 0 {
            observe(s, s as f64 * cfg.dt, &psi);
        }
    }
    Ok(psi)
}

/// `<psi|H|psi> / <psi|psi>`.
pub fn energy(psi: &ComplexField, cfg: &SchrodingerConfig, spectral: &Spectral) -> Result<f64> {
    cfg.grid.ensure_same(&psi.grid)?;
    let norm: f64 = psi.values.iter().map(|z| z.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut spec = psi.values.clone();
    spectral.forward(&mut spec);
    let n = spec.len() as f64;
    let PhysicalParams { hbar, m, .. } = cfg.params;
    let kinetic: f64 =
        spec.iter().zip(spectral.k_sq()).map(|(z, k2)| z.norm_sqr() * k2).sum::<f64>() * hbar * hbar / (2.0 * m) / n;
    let potential: f64 = psi.values.iter().zip(&cfg.potential.values).map(|(z, v)| z.norm_sqr() * v).sum();
    Ok((kinetic + potential) / norm)
}

/// Second-moment widths of a packet in position and wavenumber space.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PacketReport {
    pub delta_x: f64,
    pub delta_k: f64,
    pub delta_p: f64,
    pub product_xp: f64,
    pub centroid: f64,
    pub mean_k: f64,
}

pub fn packet_report(psi: &ComplexField, params: &PhysicalParams) -> Result<PacketReport> {
    packet_report_axis(psi, params, 0)
}

/// Widths along one axis. The centroid is the circular mean of `|psi|^2`
/// so packets straddling the periodic boundary are measured correctly; the
/// wavenumber moments use the unitary DFT spectrum.
pub fn packet_report_axis(psi: &ComplexField, params: &PhysicalParams, axis: usize) -> Result<PacketReport> {
    let grid = psi.grid;
    if axis >= grid.rank() {
        return Err(invalid(format!("axis {axis} out of range for rank {}", grid.rank())));
    }
    let n_axis = grid.extents()[axis];
    let stride = grid.stride(axis);
    let mut marginal = vec![0.0; n_axis];
    for (i, z) in psi.values.iter().enumerate() {
        marginal[(i / stride) % n_axis] += z.norm_sqr();
    }
    let total: f64 = marginal.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let length = grid.length(axis);
    let origin = grid.origin()[axis];
    let circ: Complex64 = marginal
        .iter()
        .enumerate()
        .map(|(j, w)| Complex64::from_polar(*w, 2.0 * PI * (grid.coord(axis, j) - origin) / length))
        .sum();
    let centroid = grid.wrap_coord(axis, origin + circ.arg() * length / (2.0 * PI));
    let var_x: f64 = marginal
        .iter()
        .enumerate()
        .map(|(j, w)| w * grid.min_image(axis, grid.coord(axis, j) - centroid).powi(2))
        .sum::<f64>()
        / total;

    let spectral = Spectral::new(&grid);
    let mut spec = psi.values.clone();
    spectral.forward(&mut spec);
    let mut kmarg = vec![0.0; n_axis];
    for (i, z) in spec.iter().enumerate() {
        kmarg[(i / stride) % n_axis] += z.norm_sqr();
    }
    let ktotal: f64 = kmarg.iter().sum();
    let ks = grid.wavenumbers(axis);
    let mean_k: f64 = kmarg.iter().zip(&ks).map(|(w, k)| w * k).sum::<f64>() / ktotal;
    let var_k: f64 = kmarg.iter().zip(&ks).map(|(w, k)| w * (k - mean_k).powi(2)).sum::<f64>() / ktotal;

    let delta_x = var_x.sqrt();
    let delta_k = var_k.sqrt();
    let delta_p = params.hbar * delta_k;
    Ok(PacketReport { delta_x, delta_k, delta_p, product_xp: delta_x * delta_p, centroid, mean_k })
}

/// Measured and reference angular frequencies for one plane wave.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DispersionMeasurement {
    pub k: f64,
    pub omega: f64,
    /// `hbar k^2 / 2m`.
    pub matter_reference: f64,
    /// `c |k|`, the linear acoustic branch.
    pub acoustic_reference: f64,
}

impl DispersionMeasurement {
    pub fn relative_error(&self) -> f64 {
        if self.matter_reference == 0.0 {
            self.omega.abs()
        } else {
            ((self.omega - self.matter_reference) / self.matter_reference).abs()
        }
    }
}

/// Number of phase samples in the dispersion fit.
pub const DISPERSION_SAMPLES: usize = 64;

/// Evolve `e^{ikx}` (axis 0) and fit the phase of its overlap with the
/// initial wave against time by least squares; `omega` is minus the slope.
pub fn measure_dispersion(k: f64, cfg: &SchrodingerConfig) -> Result<DispersionMeasurement> {
    if !cfg.is_free() {
        return Err(invalid("dispersion is measured with V = 0"));
    }
    if !cfg.grid.on_reciprocal_lattice(0, k) {
        return Err(invalid(format!("k = {k} is not on the reciprocal lattice")));
    }
    let grid = cfg.grid;
    let wave = ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x[0]));
    let stepper = SplitStepper::new(cfg)?;
    let mut psi = wave.clone();
    let mut times = Vec::with_capacity(DISPERSION_SAMPLES + 1);
    let mut phases: Vec<f64> = Vec::with_capacity(DISPERSION_SAMPLES + 1);
    for s in 0..=DISPERSION_SAMPLES {
        if s > 0 {
            stepper.step(&mut psi.values);
        }
        let overlap: Complex64 = wave.values.iter().zip(&psi.values).map(|(a, b)| a.conj() * b).sum();
        let raw = overlap.arg();
        let phase = match phases.last() {
            Some(&prev) => raw + 2.0 * PI * ((prev - raw) / (2.0 * PI)).round(),
            None => raw,
        };
        times.push(s as f64 * cfg.dt);
        phases.push(phase);
    }
    let slope = least_squares_slope(&times, &phases);
    let PhysicalParams { hbar, m, c, .. } = cfg.params;
    Ok(DispersionMeasurement {
        k,
        omega: -slope,
        matter_reference: hbar * k * k / (2.0 * m),
        acoustic_reference: acoustic_frequency(k, c),
    })
}

/// Linear acoustic branch `omega = c |k|`.
pub fn acoustic_frequency(k: f64, c: f64) -> f64 {
    c * k.abs()
}

pub(crate) fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Galilean image of a free solution: `e^{i(m v x - m v^2 t/2)/hbar} psi(x - v t)`
/// along axis 0. `m v / hbar` must lie on the reciprocal lattice.
pub fn galilean_boost(psi: &ComplexField, params: &PhysicalParams, v: f64, t: f64) -> Result<ComplexField> {
    let grid = psi.grid;
    let k = params.m * v / params.hbar;
    if !grid.on_reciprocal_lattice(0, k) {
        return Err(invalid(format!("boost wavenumber {k} is not grid-periodic")));
    }
    let mut shift = vec![0.0; grid.rank()];
    shift[0] = v * t;
    let moved = Spectral::new(&grid).translate(&psi.values, &shift);
    let omega = 0.5 * params.m * v * v / params.hbar;
    let values = moved
        .into_iter()
        .enumerate()
        .map(|(i, z)| z * Complex64::from_polar(1.0, k * grid.position(i)[0] - omega * t))
        .collect();
    ComplexField::new(grid, values)
}

/// One row of the observable time series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ObservableRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub delta_x: f64,
    pub delta_k: f64,
    pub product_xp: f64,
}

pub fn observe(t: f64, psi: &ComplexField, cfg: &SchrodingerConfig, spectral: &Spectral) -> Result<ObservableRow> {
    let report = packet_report(psi, &cfg.params)?;
    Ok(ObservableRow {
        t,
        norm: psi.norm(),
        energy: energy(psi, cfg, spectral)?,
        delta_x: report.delta_x,
        delta_k: report.delta_k,
        product_xp: report.product_xp,
    })
}

pub fn write_observables_csv<W: Write>(mut out: W, rows: &[ObservableRow]) -> Result<()> {
    writeln!(out, "t,norm,energy,delta_x,delta_k,product_xp")?;
    for r in rows {
        writeln!(out, "{:?},{:?},{:?},{:?},{:?},{:?}", r.t, r.norm, r.energy, r.delta_x, r.delta_k, r.product_xp)?;
    }
    Ok(())
}

/// Normalized Gaussian packet along axis 0 (other axes: product of
/// Gaussians with the same width), `|psi|^2` having standard deviation `sigma`.
pub fn gaussian_packet(grid: Grid, centre: &[f64], sigma: &[f64], k0: &[f64]) -> Result<ComplexField> {
    let rank = grid.rank();
    if centre.len() != rank || sigma.len() != rank || k0.len() != rank {
        return Err(invalid("packet centre/sigma/k0 must match grid rank"));
    }
    let mut psi = ComplexField::from_fn(grid, |x| {
        let mut amp = 0.0;
        let mut phase = 0.0;
        for a in 0..rank {
            let d = grid.min_image(a, x[a] - centre[a]);
            amp -= d * d / (4.0 * sigma[a] * sigma[a]);
            phase += k0[a] * (x[a] - centre[a]);
        }
        Complex64::from_polar(amp.exp(), phase)
    });
    psi.normalize_to(1.0)?;
    Ok(psi)
}

/// Random localized state on a rank-1 grid: a trigonometric polynomial with
/// uniform complex coefficients on the lattice wavenumbers `|j| <= modes`,
/// under a Gaussian envelope of width `sigma` centred within `L/8` of zero.
/// The envelope keeps the state well inside the box so the periodic moments
/// match their whole-line values.
pub fn random_localized_state<R: rand::Rng>(grid: Grid, modes: usize, sigma: f64, rng: &mut R) -> Result<ComplexField> {
    if grid.rank() != 1 {
        return Err(invalid("random states are rank-1"));
    }
    if !(sigma > 0.0 && 8.0 * sigma < grid.length(0)) {
        return Err(invalid("envelope width must satisfy 0 < 8 sigma < L"));
    }
    let length = grid.length(0);
    let centre = rng.gen_range(-length / 8.0..length / 8.0);
    let coeffs: Vec<(f64, Complex64)> = (-(modes as i64)..=modes as i64)
        .map(|j| (2.0 * PI * j as f64 / length, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let mut psi = ComplexField::from_fn(grid, |x| {
        let d = x[0] - centre;
        let env = (-d * d / (4.0 * sigma * sigma)).exp();
        coeffs.iter().map(|(k, c)| c * Complex64::from_polar(env, k * x[0])).sum()
    });
    psi.normalize_to(1.0)?;
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct UncertaintySurvey {
    pub states: usize,
    /// `hbar / 2`.
    pub bound: f64,
    pub min_product: f64,
    pub max_product: f64,
    /// Products below `bound - tolerance`.
    pub violations: usize,
    pub tolerance: f64,
    /// Product for a Gaussian of the same envelope width.
    pub gaussian_product: f64,
    #[serde(skip)]
    pub products: Vec<f64>,
}

/// `dx dp` for `n_states` random localized states, each drawn from its own
/// stream of `seed`.
pub fn uncertainty_survey(
    params: &PhysicalParams,
    grid: Grid,
    n_states: usize,
    modes: usize,
    sigma: f64,
    seed: u64,
) -> Result<UncertaintySurvey> {
    use rand::SeedableRng;
    let tolerance = 1e-9;
    let products = (0..n_states)
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let psi = random_localized_state(grid, modes, sigma, &mut rng)?;
            Ok(packet_report(&psi, params)?.product_xp)
        })
        .collect::<Result<Vec<f64>>>()?;
    let bound = 0.5 * params.hbar;
    let gauss = gaussian_packet(grid, &[0.0], &[sigma], &[0.0])?;
    Ok(UncertaintySurvey {
        states: n_states,
        bound,
        min_product: products.iter().cloned().fold(f64::INFINITY, f64::min),
        max_product: products.iter().cloned().fold(0.0, f64::max),
        violations: products.iter().filter(|&&p| p < bound - tolerance).count(),
        tolerance,
        gaussian_product: packet_report(&gauss, params)?.product_xp,
        products,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural() -> PhysicalParams {
        PhysicalParams::natural()
    }

    #[test]
    fn rejects_bad_steps() {
        let g = Grid::centered(&[64], &[10.0]).unwrap();
        assert!(SchrodingerConfig::free(natural(), g, 0.0).is_err());
        assert!(matches!(SchrodingerConfig::free(natural(), g, 1.0), Err(Error::Unresolved(_))));
        let v = ScalarField::constant(g, 1000.0);
        assert!(SchrodingerConfig::new(natural(), g, 0.01, v).is_err());
    }

    #[test]
    fn plane_wave_phase_is_exact() {
        let g = Grid::centered(&[64], &[2.0 * PI]).unwrap();
        let cfg = SchrodingerConfig::free(natural(), g, 0.002).unwrap();
        let k = 3.0;
        let psi0 = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k * x[0]));
        let n = 1250;
        let psi = evolve(&psi0, &cfg, n).unwrap();
        let t = n as f64 * cfg.dt;
        for i in 0..64 {
            let want = Complex64::from_polar(1.0, k * g.coord(0, i) - k * k * t / 2.0);
            assert!((psi.values[i] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let g = Grid::centered(&[32], &[10.0]).unwrap();
        let cfg = SchrodingerConfig::free(natural(), g, 0.01).unwrap();
        let psi0 = gaussian_packet(g, &[0.0], &[1.0], &[0.5]).unwrap();
        assert_eq!(evolve(&psi0, &cfg, 0).unwrap(), psi0);
    }

    #[test]
    fn strang_local_error_is_third_order() {
        // || S(dt) psi - S(dt/2)^2 psi || shrinks 8x when dt halves.
        let g = Grid::centered(&[128], &[40.0]).unwrap();
        let p = natural();
        let v = ScalarField::from_fn(g, |x| 0.5 * x[0] * x[0] * 0.04);
        let psi0 = gaussian_packet(g, &[1.0], &[1.0], &[1.0]).unwrap();
        let diff = |dt: f64| {
            let full = SchrodingerConfig::new(p, g, dt, v.clone()).unwrap();
            let half = SchrodingerConfig::new(p, g, dt / 2.0, v.clone()).unwrap();
            let a = evolve(&psi0, &full, 1).unwrap();
            let b = evolve(&psi0, &half, 2).unwrap();
            a.relative_l2(&b).unwrap()
        };
        let ratio = diff(0.04) / diff(0.02);
        assert!((ratio - 8.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn oscillator_ground_state_is_stationary() {
        let g = Grid::centered(&[128], &[24.0]).unwrap();
        let p = natural();
        let w0: f64 = 0.8;
        let v = ScalarField::from_fn(g, |x| 0.5 * w0 * w0 * x[0] * x[0]);
        let sigma = (1.0 / (2.0 * w0)).sqrt();
        let psi0 = gaussian_packet(g, &[0.0], &[sigma], &[0.0]).unwrap();
        let dt = 0.002;
        let cfg = SchrodingerConfig::new(p, g, dt, v).unwrap();
        let n = 500;
        let psi = evolve(&psi0, &cfg, n).unwrap();
        let t = n as f64 * dt;
        let centre = 64;
        for i in 40..88 {
            assert!((psi.values[i].norm() - psi0.values[i].norm()).abs() < 1e-6);
        }
        let phase = (psi.values[centre] / psi0.values[centre]).arg();
        assert!((phase + w0 / 2.0 * t).abs() < 1e-6, "phase {phase}");
    }

    #[test]
    fn gaussian_saturates_uncertainty() {
        let g = Grid::centered(&[256], &[40.0]).unwrap();
        let psi = gaussian_packet(g, &[3.0], &[1.3], &[0.0]).unwrap();
        let r = packet_report(&psi, &natural()).unwrap();
        assert!((r.delta_x - 1.3).abs() < 1e-9);
        assert!((r.delta_k - 1.0 / 2.6).abs() < 1e-9);
        assert!((r.product_xp - 0.5).abs() < 1e-6);
        assert!((r.centroid - 3.0).abs() < 1e-9);
    }

    #[test]
    fn random_states_respect_bound() {
        let g = Grid::centered(&[256], &[40.0]).unwrap();
        let s = uncertainty_survey(&natural(), g, 40, 8, 2.0, 3).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.min_product > 0.5);
        assert!((s.gaussian_product - 0.5).abs() < 1e-6);
        let again = uncertainty_survey(&natural(), g, 40, 8, 2.0, 3).unwrap();
        assert_eq!(s.products, again.products);
        // no modulation reduces to the Gaussian
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let psi = random_localized_state(g, 0, 2.0, &mut rng).unwrap();
        assert!((packet_report(&psi, &natural()).unwrap().product_xp - 0.5).abs() < 1e-6);
    }

    #[test]
    fn modulation_shifts_mean_k_only() {
        let g = Grid::centered(&[256], &[40.0]).unwrap();
        let k0 = 2.0 * PI * 6.0 / 40.0;
        let a = packet_report(&gaussian_packet(g, &[0.0], &[1.0], &[0.0]).unwrap(), &natural()).unwrap();
        let b = packet_report(&gaussian_packet(g, &[0.0], &[1.0], &[k0]).unwrap(), &natural()).unwrap();
        assert!((b.mean_k - k0).abs() < 1e-10);
        assert!((a.delta_x - b.delta_x).abs() < 1e-12);
        assert!((a.delta_k - b.delta_k).abs() < 1e-10);
    }

    #[test]
    fn centroid_across_boundary() {
        let g = Grid::centered(&[256], &[40.0]).unwrap();
        let psi = gaussian_packet(g, &[19.5], &[1.0], &[0.0]).unwrap();
        let r = packet_report(&psi, &natural()).unwrap();
        assert!((r.delta_x - 1.0).abs() < 1e-9, "{}", r.delta_x);
        assert!((g.min_image(0, r.centroid - 19.5)).abs() < 1e-9);
    }

    #[test]
    fn zero_field_rejected() {
        let g = Grid::centered(&[16], &[1.0]).unwrap();
        assert!(matches!(packet_report(&ComplexField::zeros(g), &natural()), Err(Error::ZeroNorm)));
    }

    #[test]
    fn dispersion_values() {
        let g = Grid::centered(&[64], &[2.0 * PI]).unwrap();
        let cfg = SchrodingerConfig::free(natural(), g, 0.002).unwrap();
        let zero = measure_dispersion(0.0, &cfg).unwrap();
        assert!(zero.omega.abs() < 1e-12);
        let two = measure_dispersion(2.0, &cfg).unwrap();
        assert!((two.omega - 2.0).abs() < 1e-8);
        assert_eq!(two.acoustic_reference, 2.0);
        assert!(measure_dispersion(2.5, &cfg).is_err());
        let bumpy = SchrodingerConfig::new(natural(), g, 0.002, ScalarField::constant(g, 0.1)).unwrap();
        assert!(measure_dispersion(2.0, &bumpy).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        let row = ObservableRow { t: 0.0, norm: 1.0, energy: 0.5, delta_x: 1.0, delta_k: 0.5, product_xp: 0.5 };
        write_observables_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,norm,energy,delta_x,delta_k,product_xp\n0.0,1.0,0.5,"));
    }
}
