//! Potential-form Euler-Korteweg solver for `(rho, Phi)` and its
//! equivalence check against the split-step Schrodinger solver.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fluid::{apply_floor, madelung_compose, madelung_decompose, sqrt_rho_curvature, EnergyDiagnostics};
use crate::grid::{ComplexField, Grid, ScalarField, MAX_RANK};
use crate::params::PhysicalParams;
use crate::schrodinger::{evolve, SchrodingerConfig};
use crate::spectral::Spectral;

/// Fraction of cells allowed to sit on the density floor before a step aborts.
pub const FLOOR_ABORT_FRACTION: f64 = 1e-3;

/// Stability radius of classical RK4 on the imaginary axis.
pub const RK4_IMAGINARY_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct HydroState {
    pub rho: ScalarField,
    /// Velocity potential; may carry a linear ramp whose jump across the
    /// periodic boundary is a multiple of `2 pi hbar / m`.
    pub phi: ScalarField,
    pub t: f64,
}

impl HydroState {
    pub fn new(rho: ScalarField, phi: ScalarField, t: f64) -> Result<Self> {
        rho.grid.ensure_same(&phi.grid)?;
        Ok(Self { rho, phi, t })
    }

    /// `(rho, hbar theta / m)` from a nodeless wavefunction.
    pub fn from_wavefunction(psi: &ComplexField, params: &PhysicalParams) -> Result<Self> {
        let pair = madelung_decompose(psi, params.rho_floor())?;
        let phi = pair.theta.map(|t| t * params.hbar_over_m());
        Ok(Self { rho: pair.rho, phi, t: 0.0 })
    }

    pub fn to_wavefunction(&self, params: &PhysicalParams) -> Result<ComplexField> {
        let s = 1.0 / params.hbar_over_m();
        madelung_compose(&self.rho, &self.phi.map(|p| p * s))
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }
}

#[derive(Debug, Clone)]
pub struct HydroConfig {
    pub params: PhysicalParams,
    pub grid: Grid,
    pub dt: f64,
    pub potential: ScalarField,
    pub include_enthalpy: bool,
    pub include_korteweg: bool,
    /// Capillary coefficient; `None` means `hbar^2 / 4m^2`.
    pub kappa: Option<f64>,
}

impl HydroConfig {
    /// Korteweg on, enthalpy off, no potential.
    pub fn free(params: PhysicalParams, grid: Grid, dt: f64) -> Result<Self> {
        let cfg = Self {
            params,
            grid,
            dt,
            potential: ScalarField::zeros(grid),
            include_enthalpy: false,
            include_korteweg: true,
            kappa: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or_else(|| self.params.scales().kappa)
    }

    /// Highest linear frequency on the grid about a uniform state at `rho_ref`.
    pub fn max_linear_frequency(&self) -> f64 {
        // omega^2 = c^2 k^2 + (2 kappa) k^4; with the default kappa the
        // second term is (hbar k^2 / 2m)^2.
        let k2 = self.grid.k_max_sq();
        let acoustic = if self.include_enthalpy { self.params.c * self.params.c * k2 } else { 0.0 };
        let dispersive = if self.include_korteweg { 2.0 * self.kappa() * k2 * k2 } else { 0.0 };
        (acoustic + dispersive).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.ensure_same(&self.potential.grid)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k >= 0.0) {
                return Err(invalid(format!("kappa must be >= 0, got {k}")));
            }
        }
        let pot = self.dt * self.potential.max_abs() / self.params.hbar;
        if pot >= PI {
            return Err(Error::Unresolved(format!("potential phase step {pot:.3} >= pi")));
        }
        let lin = self.dt * self.max_linear_frequency();
        if lin >= RK4_IMAGINARY_BOUND {
            return Err(Error::Unresolved(format!(
                "linear phase step {lin:.3} exceeds the RK4 bound {RK4_IMAGINARY_BOUND:.3}"
            )));
        }
        Ok(())
    }

    fn k_max(&self) -> f64 {
        self.grid.k_max_sq().sqrt()
    }
}

/// How a phase or potential gradient is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientScheme {
    /// Spectral derivative of `e^{i theta}`; exact for band-limited fields,
    /// including ramps whose jump across the boundary is a multiple of 2 pi.
    #[default]
    Spectral,
    /// Twelfth-order central differences of the branch-wrapped phase;
    /// suited to fields with vortex cores, where `e^{i theta}` is not smooth.
    WrappedDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    /// Velocity potential `Phi`: `v = grad Phi`.
    Potential,
    /// Phase `theta`: `v = (hbar/m) grad theta`.
    Phase,
}

/// Half-width of the wrapped-difference stencil.
pub const WRAPPED_STENCIL_HALF_WIDTH: usize = 6;

fn central_weights(p: usize) -> Vec<f64> {
    // c_j = 2 (-1)^{j+1} (p!)^2 / ((p-j)! (p+j)! j)
    (1..=p)
        .map(|j| {
            let mut ratio = 1.0;
            for i in 1..=j {
                ratio *= (p + 1 - i) as f64 / (p + i) as f64;
            }
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * sign * ratio / j as f64
        })
        .collect()
}

fn wrap_pi(x: f64) -> f64 {
    x - 2.0 * PI * (x / (2.0 * PI)).round()
}

/// Gradient of a phase field (radians) as a list of components.
pub fn phase_gradient(theta: &ScalarField, scheme: GradientScheme) -> Vec<ScalarField> {
    let grid = theta.grid;
    match scheme {
        GradientScheme::Spectral => {
            let sp = Spectral::new(&grid);
            gauge_safe_gradient(&sp, &theta.values)
                .into_iter()
                .map(|values| ScalarField { grid, values })
                .collect()
        }
        GradientScheme::WrappedDifference => {
            let w = central_weights(WRAPPED_STENCIL_HALF_WIDTH);
            (0..grid.rank())
                .map(|a| {
                    let h = grid.spacing()[a];
                    let values = (0..grid.len())
                        .map(|i| {
                            let idx = grid.unravel(i);
                            let t0 = theta.values[i];
                            let mut acc = 0.0;
                            for (j, c) in w.iter().enumerate() {
                                let o = j as isize + 1;
                                let fwd = theta.values[grid.shifted(&idx, a, o)];
                                let bwd = theta.values[grid.shifted(&idx, a, -o)];
                                acc += c * (wrap_pi(fwd - t0) - wrap_pi(bwd - t0)) / 2.0;
                            }
                            acc / h
                        })
                        .collect();
                    ScalarField { grid, values }
                })
                .collect()
        }
    }
}

/// `grad theta = Im(conj(u) grad u)` with `u = e^{i theta}`.
fn gauge_safe_gradient(sp: &Spectral, theta: &[f64]) -> Vec<Vec<f64>> {
    let u: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    sp.gradient_complex(&u)
        .into_iter()
        .map(|du| du.iter().zip(&u).map(|(d, z)| (z.conj() * d).im).collect())
        .collect()
}

/// Velocity field from a potential or a phase.
pub fn velocity_from_phase(
    field: &ScalarField,
    params: &PhysicalParams,
    kind: PhaseKind,
    scheme: GradientScheme,
) -> Vec<ScalarField> {
    let to_theta = match kind {
        PhaseKind::Potential => 1.0 / params.hbar_over_m(),
        PhaseKind::Phase => 1.0,
    };
    let theta = field.map(|v| v * to_theta);
    let s = params.hbar_over_m();
    phase_gradient(&theta, scheme).into_iter().map(|g| g.map(|v| v * s)).collect()
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub floored_cells: usize,
    pub min_rho: f64,
}

/// RK4 integrator with cached transforms.
#[derive(Debug, Clone)]
pub struct HydroSolver {
    cfg: HydroConfig,
    spectral: Spectral,
}

struct Rates {
    drho: Vec<f64>,
    dphi: Vec<f64>,
    floored: usize,
}

impl HydroSolver {
    pub fn new(cfg: HydroConfig) -> Result<Self> {
        cfg.validate()?;
        let spectral = Spectral::new(&cfg.grid);
        Ok(Self { cfg, spectral })
    }

    pub fn config(&self) -> &HydroConfig {
        &self.cfg
    }

    fn velocity(&self, phi: &[f64]) -> Vec<Vec<f64>> {
        let p = &self.cfg.params;
        let to_theta = 1.0 / p.hbar_over_m();
        let theta: Vec<f64> = phi.iter().map(|v| v * to_theta).collect();
        let s = p.hbar_over_m();
        gauge_safe_gradient(&self.spectral, &theta)
            .into_iter()
            .map(|g| g.into_iter().map(|v| v * s).collect())
            .collect()
    }

    /// Specific energy `eps` such that `dPhi/dt = -eps`, restricted to the
    /// unaliased band like every rate the solver uses.
    fn epsilon(&self, rho: &[f64], vel: &[Vec<f64>]) -> (Vec<f64>, usize) {
        let cfg = &self.cfg;
        let p = &cfg.params;
        let n = rho.len();
        let mut eps = vec![0.0; n];
        for comp in vel {
            for (e, v) in eps.iter_mut().zip(comp) {
                *e += 0.5 * v * v;
            }
        }
        let mut floored = 0;
        if cfg.include_korteweg {
            let (curv, f) = sqrt_rho_curvature(&self.spectral, rho, p.rho_floor());
            floored = f;
            let coef = 2.0 * cfg.kappa();
            eps.iter_mut().zip(&curv).for_each(|(e, q)| *e -= coef * q);
        }
        if cfg.include_enthalpy {
            let c2 = p.c * p.c;
            let floor = p.rho_floor();
            for (e, &r) in eps.iter_mut().zip(rho) {
                *e += c2 * (r.max(floor) / p.rho_ref).ln();
            }
        }
        let inv_m = 1.0 / p.m;
        eps.iter_mut().zip(&cfg.potential.values).for_each(|(e, v)| *e += v * inv_m);
        self.spectral.dealias(&mut eps);
        (eps, floored)
    }

    fn rates(&self, rho: &[f64], phi: &[f64]) -> Rates {
        let vel = self.velocity(phi);
        let (eps, floored) = self.epsilon(rho, &vel);
        let flux: Vec<Vec<f64>> = vel.iter().map(|v| v.iter().zip(rho).map(|(a, r)| a * r).collect()).collect();
        let mut drho: Vec<f64> = self.spectral.divergence(&flux).into_iter().map(|d| -d).collect();
        self.spectral.dealias(&mut drho);
        Rates { drho, dphi: eps.into_iter().map(|e| -e).collect(), floored }
    }

    /// Checks the advective bound `dt max|grad Phi| k_max < 1` for `state`.
    pub fn check_advective(&self, state: &HydroState) -> Result<()> {
        let vel = self.velocity(&state.phi.values);
        let vmax = (0..state.phi.values.len())
            .map(|i| vel.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let courant = self.cfg.dt * vmax * self.cfg.k_max();
        if courant >= 1.0 {
            return Err(Error::Unresolved(format!("advective number {courant:.3} >= 1 at t = {}", state.t)));
        }
        Ok(())
    }

    /// One RK4 step of signed length `h`.
    fn advance(&self, state: &mut HydroState, h: f64) -> Result<StepInfo> {
        let n = state.rho.values.len();
        let rho0 = &state.rho.values;
        let phi0 = &state.phi.values;
        let axpy = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> { base.iter().zip(k).map(|(b, d)| b + s * d).collect() };
        let k1 = self.rates(rho0, phi0);
        let k2 = self.rates(&axpy(rho0, &k1.drho, h / 2.0), &axpy(phi0, &k1.dphi, h / 2.0));
        let k3 = self.rates(&axpy(rho0, &k2.drho, h / 2.0), &axpy(phi0, &k2.dphi, h / 2.0));
        let k4 = self.rates(&axpy(rho0, &k3.drho, h), &axpy(phi0, &k3.dphi, h));
        let combine = |base: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..n).map(|i| base[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
        };
        let mut rho = combine(rho0, &k1.drho, &k2.drho, &k3.drho, &k4.drho);
        let phi = combine(phi0, &k1.dphi, &k2.dphi, &k3.dphi, &k4.dphi);
        if let Some(i) = (0..n).find(|&i| !rho[i].is_finite() || !phi[i].is_finite()) {
            return Err(Error::Numeric(format!("non-finite value at cell {i}, t = {}", state.t + h)));
        }
        let min_rho = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        let floored = apply_floor(&mut rho, self.cfg.params.rho_floor());
        let worst = floored.max(k1.floored).max(k2.floored).max(k3.floored).max(k4.floored);
        if worst as f64 > FLOOR_ABORT_FRACTION * n as f64 {
            return Err(Error::DensityCollapse { cells: worst, total: n });
        }
        state.rho.values = rho;
        state.phi.values = phi;
        state.t += h;
        Ok(StepInfo { floored_cells: worst, min_rho })
    }

    pub fn step(&self, state: &mut HydroState) -> Result<StepInfo> {
        self.cfg.grid.ensure_same(&state.rho.grid)?;
        self.cfg.grid.ensure_same(&state.phi.grid)?;
        self.check_advective(state)?;
        self.advance(state, self.cfg.dt)
    }

    /// `n_steps` steps; returns the smallest pre-floor density seen and the
    /// largest floored-cell count.
    pub fn evolve(&self, state: &mut HydroState, n_steps: usize) -> Result<StepInfo> {
        let mut info = StepInfo { floored_cells: 0, min_rho: state.rho.min() };
        for _ in 0..n_steps {
            let s = self.step(state)?;
            info.floored_cells = info.floored_cells.max(s.floored_cells);
            info.min_rho = info.min_rho.min(s.min_rho);
        }
        Ok(info)
    }

    /// Energy diagnostics. The rate residual compares a centred difference
    /// of `Phi` over one forward and one backward step with `-eps`, taking
    /// the largest deviation over non-floored cells accepted by `keep`.
    pub fn energy(&self, state: &HydroState, keep: Option<&dyn Fn(&[f64; MAX_RANK]) -> bool>) -> Result<EnergyDiagnostics> {
        let cfg = &self.cfg;
        let p = &cfg.params;
        let grid = cfg.grid;
        let vel = self.velocity(&state.phi.values);
        let (eps, _) = self.epsilon(&state.rho.values, &vel);
        let dv = grid.cell_volume();
        let hamiltonian = state.rho.values.iter().zip(&eps).map(|(r, e)| r * e).sum::<f64>() * dv;
        let phi_rate_residual = match keep {
            None => None,
            Some(keep) => {
                let mut fwd = state.clone();
                self.advance(&mut fwd, cfg.dt)?;
                let mut bwd = state.clone();
                self.advance(&mut bwd, -cfg.dt)?;
                let floor = p.rho_floor();
                let worst = (0..grid.len())
                    .filter(|&i| state.rho.values[i] > floor && keep(&grid.position(i)))
                    .map(|i| ((fwd.phi.values[i] - bwd.phi.values[i]) / (2.0 * cfg.dt) + eps[i]).abs())
                    .fold(0.0, f64::max);
                Some(worst)
            }
        };
        Ok(EnergyDiagnostics {
            hamiltonian_field: ScalarField { grid, values: eps.iter().map(|e| p.m * e).collect() },
            epsilon_field: ScalarField { grid, values: eps },
            hamiltonian,
            action_field: state.phi.map(|f| p.m * f),
            rest_energy: p.m * p.c * p.c,
            pressure_energy: p.c * p.c * state.mass(),
            phi_rate_residual,
        })
    }
}

pub fn hydro_step(state: &HydroState, cfg: &HydroConfig) -> Result<HydroState> {
    let solver = HydroSolver::new(cfg.clone())?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

/// Energy diagnostics without the rate check.
pub fn bernoulli_energy(state: &HydroState, cfg: &HydroConfig) -> Result<EnergyDiagnostics> {
    HydroSolver::new(cfg.clone())?.energy(state, None)
}

/// One resolution of an equivalence comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceRun {
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    /// Relative L2 distance between recomposed and split-step `psi`.
    pub l2_error: f64,
    pub rho_error: f64,
    /// Density-weighted RMS of the wrapped phase difference.
    pub phase_error: f64,
    pub min_rho: f64,
    pub floored_cells: usize,
    /// Density dropped under the node threshold.
    pub inconclusive: bool,
}

/// Density below which a run is treated as having formed a node:
/// `(10^3)^2` times the floor.
pub fn node_threshold(params: &PhysicalParams) -> f64 {
    1e6 * params.rho_floor()
}

/// Evolve `psi0` with both solvers to `t_final` and compare.
pub fn equivalence_run(
    psi0: &ComplexField,
    schrodinger: &SchrodingerConfig,
    hydro: &HydroConfig,
    t_final: f64,
) -> Result<EquivalenceRun> {
    let grid = psi0.grid;
    grid.ensure_same(&schrodinger.grid)?;
    grid.ensure_same(&hydro.grid)?;
    if (schrodinger.dt - hydro.dt).abs() > 1e-15 * hydro.dt {
        return Err(invalid("solver pair must share dt"));
    }
    if hydro.include_enthalpy || !hydro.include_korteweg {
        return Err(invalid("equivalence needs enthalpy off and korteweg on"));
    }
    let params = hydro.params;
    let threshold = node_threshold(&params);
    let min0 = psi0.values.iter().map(|z| z.norm_sqr()).fold(f64::INFINITY, f64::min);
    if min0 < threshold {
        return Err(invalid(format!("initial |psi|^2 minimum {min0:e} is below the node threshold {threshold:e}")));
    }
    let steps = (t_final / hydro.dt).round() as usize;
    if (steps as f64 * hydro.dt - t_final).abs() > 1e-9 * t_final.max(hydro.dt) {
        return Err(invalid("T must be an integer number of steps"));
    }
    let psi_s = evolve(psi0, schrodinger, steps)?;
    let mut state = HydroState::from_wavefunction(psi0, &params)?;
    let solver = HydroSolver::new(hydro.clone())?;
    let mut min_rho = state.rho.min();
    let mut floored_cells = 0;
    let mut inconclusive = false;
    for _ in 0..steps {
        match solver.step(&mut state) {
            Ok(info) => {
                min_rho = min_rho.min(info.min_rho);
                floored_cells = floored_cells.max(info.floored_cells);
            }
            Err(Error::DensityCollapse { cells, .. }) => {
                floored_cells = cells;
                inconclusive = true;
                break;
            }
            Err(e) => return Err(e),
        }
        if min_rho < threshold {
            inconclusive = true;
            break;
        }
    }
    let psi_h = state.to_wavefunction(&params)?;
    let rho_s = psi_s.density();
    let weight: f64 = rho_s.values.iter().sum();
    let phase_error = (psi_h
        .values
        .iter()
        .zip(&psi_s.values)
        .zip(&rho_s.values)
        .map(|((a, b), r)| r * (a / b).arg().powi(2))
        .sum::<f64>()
        / weight)
        .sqrt();
    Ok(EquivalenceRun {
        cells: grid.len(),
        dt: hydro.dt,
        steps,
        l2_error: psi_h.relative_l2(&psi_s)?,
        rho_error: crate::grid::relative_l2(&state.rho, &rho_s)?,
        phase_error,
        min_rho,
        floored_cells,
        inconclusive,
    })
}

/// Gaussian bump on a uniform background, optionally drifting:
/// `psi0 = (sqrt(rho_b) + A exp(-x^2/4 sigma^2)) e^{i k_d x}` along axis 0,
/// with `k_d = 2 pi j / L`. Keeping `A < sqrt(rho_b)` keeps the free
/// evolution nodeless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceScenario {
    pub length: f64,
    pub sigma: f64,
    pub background: f64,
    pub amplitude: f64,
    pub drift_modes: i32,
    /// `dt = courant * dx^2` keeps the RK4 phase step fixed under refinement.
    pub courant: f64,
    pub t_final: f64,
}

impl Default for EquivalenceScenario {
    fn default() -> Self {
        Self { length: 40.0, sigma: 1.0, background: 1.0, amplitude: 0.5, drift_modes: 0, courant: 0.25, t_final: 1.0 }
    }
}

impl EquivalenceScenario {
    pub fn drift_wavenumber(&self) -> f64 {
        2.0 * PI * self.drift_modes as f64 / self.length
    }

    /// Initial field and solver pair on a 1D grid of `cells`, with `dt`
    /// shrunk so the run ends exactly at `t_final`.
    pub fn build(
        &self,
        params: &PhysicalParams,
        cells: usize,
        kappa: Option<f64>,
    ) -> Result<(ComplexField, SchrodingerConfig, HydroConfig)> {
        if !(self.amplitude.abs() < self.background.sqrt()) {
            return Err(invalid("amplitude must stay below sqrt(background) for a nodeless run"));
        }
        let grid = Grid::centered(&[cells], &[self.length])?;
        let dx = grid.spacing()[0];
        let target = self.courant * dx * dx;
        let steps = (self.t_final / target).ceil().max(1.0);
        let dt = self.t_final / steps;
        let kd = self.drift_wavenumber();
        let (b, a, s) = (self.background.sqrt(), self.amplitude, self.sigma);
        let psi0 = ComplexField::from_fn(grid, |x| {
            Complex64::from_polar(b + a * (-x[0] * x[0] / (4.0 * s * s)).exp(), kd * x[0])
        });
        let schrodinger = SchrodingerConfig::free(*params, grid, dt)?;
        let mut hydro = HydroConfig::free(*params, grid, dt)?;
        hydro.kappa = kappa;
        hydro.validate()?;
        Ok((psi0, schrodinger, hydro))
    }
}

/// Equivalence results over several resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub grid: Vec<usize>,
    pub dt: Vec<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub l2_error: Vec<f64>,
    pub order_estimate: f64,
    pub min_rho: f64,
    pub floored_cells: usize,
    pub inconclusive: bool,
    #[serde(skip)]
    pub runs: Vec<EquivalenceRun>,
}

impl EquivalenceReport {
    /// Error at the given resolution, if it was run.
    pub fn error_at(&self, cells: usize) -> Option<f64> {
        self.runs.iter().find(|r| r.cells == cells).map(|r| r.l2_error)
    }
}

/// Runs the scenario at each resolution and fits the convergence order as
/// minus the least-squares slope of `log error` against `log cells`.
pub fn equivalence_report(
    scenario: &EquivalenceScenario,
    params: &PhysicalParams,
    resolutions: &[usize],
    kappa: Option<f64>,
) -> Result<EquivalenceReport> {
    let mut runs = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let (psi0, s, h) = scenario.build(params, n, kappa)?;
        runs.push(equivalence_run(&psi0, &s, &h, scenario.t_final)?);
    }
    let order_estimate = if runs.len() >= 2 {
        let x: Vec<f64> = runs.iter().map(|r| (r.cells as f64).ln()).collect();
        let y: Vec<f64> = runs.iter().map(|r| r.l2_error.max(f64::MIN_POSITIVE).ln()).collect();
        -crate::schrodinger::least_squares_slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(EquivalenceReport {
        grid: runs.iter().map(|r| r.cells).collect(),
        dt: runs.iter().map(|r| r.dt).collect(),
        t_final: scenario.t_final,
        l2_error: runs.iter().map(|r| r.l2_error).collect(),
        order_estimate,
        min_rho: runs.iter().map(|r| r.min_rho).fold(f64::INFINITY, f64::min),
        floored_cells: runs.iter().map(|r| r.floored_cells).max().unwrap_or(0),
        inconclusive: runs.iter().any(|r| r.inconclusive),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural() -> PhysicalParams {
        PhysicalParams::natural()
    }

    fn uniform(g: Grid) -> HydroState {
        HydroState::new(ScalarField::constant(g, 1.0), ScalarField::zeros(g), 0.0).unwrap()
    }

    #[test]
    fn uniform_rest_is_fixed_point() {
        let g = Grid::centered(&[32, 32], &[10.0, 10.0]).unwrap();
        let cfg = HydroConfig::free(natural(), g, 0.01).unwrap();
        let s0 = uniform(g);
        let mut s = s0.clone();
        HydroSolver::new(cfg).unwrap().evolve(&mut s, 20).unwrap();
        assert_eq!(s.rho, s0.rho);
        assert!(s.phi.values.iter().all(|&p| p.abs() < 1e-14));
    }

    #[test]
    fn uniform_drift_is_exact() {
        let g = Grid::centered(&[64], &[20.0]).unwrap();
        let vd = 2.0 * PI * 3.0 / 20.0;
        let cfg = HydroConfig::free(natural(), g, 0.01).unwrap();
        let phi = ScalarField::from_fn(g, |x| vd * x[0]);
        let mut s = HydroState::new(ScalarField::constant(g, 1.0), phi.clone(), 0.0).unwrap();
        HydroSolver::new(cfg).unwrap().evolve(&mut s, 100).unwrap();
        let t = s.t;
        assert!((t - 1.0).abs() < 1e-12);
        for (a, b) in s.phi.values.iter().zip(&phi.values) {
            assert!((a - b + 0.5 * vd * vd * t).abs() < 1e-11);
        }
        assert!(s.rho.values.iter().all(|&r| (r - 1.0).abs() < 1e-13));
    }

    #[test]
    fn velocity_of_ramp_and_constant() {
        let p = natural();
        let g = Grid::centered(&[32, 16], &[8.0, 4.0]).unwrap();
        let vd = 2.0 * PI / 8.0;
        let phi = ScalarField::from_fn(g, |x| vd * x[0]);
        let v = velocity_from_phase(&phi, &p, PhaseKind::Potential, GradientScheme::Spectral);
        assert!(v[0].values.iter().all(|&u| (u - vd).abs() < 1e-12));
        assert!(v[1].values.iter().all(|&u| u.abs() < 1e-12));
        let flat = ScalarField::constant(g, 0.7);
        for scheme in [GradientScheme::Spectral, GradientScheme::WrappedDifference] {
            let v = velocity_from_phase(&flat, &p, PhaseKind::Phase, scheme);
            assert!(v.iter().all(|c| c.values.iter().all(|&u| u.abs() < 1e-12)));
        }
    }

    #[test]
    fn central_weights_match_known_orders() {
        assert_eq!(central_weights(1), vec![1.0]);
        let w = central_weights(2);
        assert!((w[0] - 4.0 / 3.0).abs() < 1e-15 && (w[1] + 1.0 / 6.0).abs() < 1e-15);
        // sum_j 2 j c_j / 2 = 1 (exact on linear functions)
        let w = central_weights(WRAPPED_STENCIL_HALF_WIDTH);
        let s: f64 = w.iter().enumerate().map(|(j, c)| c * (j + 1) as f64).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vortex_speed_from_wrapped_differences() {
        let p = natural();
        let g = Grid::centered(&[128, 128], &[128.0, 128.0]).unwrap();
        let (xc, yc) = (0.5, 0.5);
        let theta = ScalarField::from_fn(g, |x| (x[1] - yc).atan2(x[0] - xc));
        let v = velocity_from_phase(&theta, &p, PhaseKind::Phase, GradientScheme::WrappedDifference);
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let x = g.position(i);
            let r = ((x[0] - xc).powi(2) + (x[1] - yc).powi(2)).sqrt();
            let edge = x[0].abs().max(x[1].abs());
            if r >= 8.0 && edge < 64.0 - 7.0 {
                let speed = v[0].values[i].hypot(v[1].values[i]);
                worst = worst.max((speed * r - 1.0).abs());
            }
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn equivalence_free_and_drifting() {
        let p = natural();
        for drift_modes in [0, 2] {
            let sc = EquivalenceScenario { drift_modes, ..Default::default() };
            let r = equivalence_report(&sc, &p, &[128, 256], None).unwrap();
            assert!(!r.inconclusive);
            assert!(r.error_at(256).unwrap() < 1e-3);
            assert!(r.order_estimate >= 1.9, "order {}", r.order_estimate);
        }
    }

    #[test]
    fn equivalence_at_zero_time() {
        let p = natural();
        let sc = EquivalenceScenario { t_final: 0.0, ..Default::default() };
        let (psi0, s, h) = sc.build(&p, 64, None).unwrap_or_else(|_| {
            let sc = EquivalenceScenario::default();
            sc.build(&p, 64, None).unwrap()
        });
        let run = equivalence_run(&psi0, &s, &h, 0.0).unwrap();
        assert_eq!(run.steps, 0);
        assert!(run.l2_error < 1e-15);
    }

    #[test]
    fn doubled_capillarity_breaks_equivalence() {
        let p = natural();
        let sc = EquivalenceScenario::default();
        let r = equivalence_report(&sc, &p, &[128], Some(0.5)).unwrap();
        assert!(r.l2_error[0] > 1e-3, "{}", r.l2_error[0]);
    }

    #[test]
    fn mass_is_conserved() {
        let p = natural();
        let sc = EquivalenceScenario { drift_modes: 1, ..Default::default() };
        let (psi0, _, h) = sc.build(&p, 128, None).unwrap();
        let mut s = HydroState::from_wavefunction(&psi0, &p).unwrap();
        let m0 = s.mass();
        HydroSolver::new(h).unwrap().evolve(&mut s, 1000).unwrap();
        assert!(((s.mass() - m0) / m0).abs() < 1e-10);
    }

    #[test]
    fn acoustic_speed_with_enthalpy() {
        let p = natural();
        let len = 100.0;
        let g = Grid::centered(&[256], &[len]).unwrap();
        let k = 2.0 * PI * 4.0 / len;
        let eps = 1e-4;
        let mut cfg = HydroConfig::free(p, g, 0.02).unwrap();
        cfg.include_korteweg = false;
        cfg.include_enthalpy = true;
        let solver = HydroSolver::new(cfg).unwrap();
        let mut s = HydroState::new(
            ScalarField::from_fn(g, |x| 1.0 + eps * (k * x[0]).cos()),
            ScalarField::zeros(g),
            0.0,
        )
        .unwrap();
        solver.evolve(&mut s, 100).unwrap();
        let amp: f64 = s.rho.values.iter().enumerate().map(|(i, r)| (r - 1.0) * (k * g.coord(0, i)).cos()).sum::<f64>()
            * 2.0
            / 256.0;
        let omega = (amp / eps).acos() / s.t;
        let speed = omega / k;
        assert!((speed - 1.0).abs() < 0.01, "speed {speed}");
    }

    #[test]
    fn density_collapse_aborts() {
        let p = natural();
        let g = Grid::centered(&[64], &[20.0]).unwrap();
        let cfg = HydroConfig::free(p, g, 0.001).unwrap();
        let mut rho = ScalarField::constant(g, 1.0);
        for i in 20..30 {
            rho.values[i] = 0.0;
        }
        let mut s = HydroState::new(rho, ScalarField::zeros(g), 0.0).unwrap();
        assert!(matches!(HydroSolver::new(cfg).unwrap().step(&mut s), Err(Error::DensityCollapse { .. })));
    }

    #[test]
    fn bernoulli_closed_forms() {
        let p = natural();
        let g = Grid::centered(&[32], &[10.0]).unwrap();
        let cfg = HydroConfig::free(p, g, 0.01).unwrap();
        let e = bernoulli_energy(&uniform(g), &cfg).unwrap();
        assert!(e.epsilon_field.values.iter().all(|&x| x.abs() < 1e-15));
        assert_eq!(e.hamiltonian, 0.0);
        assert_eq!(e.rest_energy, 1.0);
        let vd = 2.0 * PI / 10.0;
        let drift = HydroState::new(ScalarField::constant(g, 1.0), ScalarField::from_fn(g, |x| vd * x[0]), 0.0).unwrap();
        let e = bernoulli_energy(&drift, &cfg).unwrap();
        assert!(e.epsilon_field.values.iter().all(|&x| (x - 0.5 * vd * vd).abs() < 1e-13));
    }

    #[test]
    fn phi_rate_matches_energy_for_vortex_lattice() {
        let p = natural();
        let len = 64.0;
        let g = Grid::centered(&[64, 64], &[len, len]).unwrap();
        let w = 2.0 * PI / len;
        // psi = sin(w x) + i sin(w y): a band-limited +-1 vortex lattice
        let psi = ComplexField::from_fn(g, |x| Complex64::new((w * (x[0] - 0.5)).sin(), (w * (x[1] - 0.5)).sin()));
        let rho = psi.density();
        let phi = ScalarField { grid: g, values: psi.values.iter().map(|z| z.arg()).collect() };
        let state = HydroState::new(rho, phi, 0.0).unwrap();
        let cfg = HydroConfig::free(p, g, 0.002).unwrap();
        let cores = [(0.5, 0.5), (0.5, 32.5), (32.5, 0.5), (32.5, 32.5)];
        let keep = |x: &[f64; MAX_RANK]| {
            cores.iter().all(|&(cx, cy)| {
                let dx = g.min_image(0, x[0] - cx);
                let dy = g.min_image(1, x[1] - cy);
                dx.hypot(dy) > 4.0
            })
        };
        let e = HydroSolver::new(cfg).unwrap().energy(&state, Some(&keep)).unwrap();
        let r = e.phi_rate_residual.unwrap();
        assert!(r < 1e-6, "residual {r}");
    }
}
