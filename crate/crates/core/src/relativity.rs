//! Convected-wave kinematics for a subsonic source: the
//! Prandtl-Glauert-Lorentz transform, retarded time, boosted
//! Klein-Gordon kinematics and the low-Mach expansion.

use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::params::PhysicalParams;

fn check_mach(mach: f64) -> Result<()> {
    if !mach.is_finite() || mach < 0.0 {
        return Err(invalid(format!("Mach number must be finite and >= 0, got {mach}")));
    }
    if mach >= 1.0 {
        return Err(Error::Supersonic(mach));
    }
    Ok(())
}

/// `1 / sqrt(1 - M^2)`, evaluated as `1/sqrt((1-M)(1+M))`.
pub fn lorentz_factor(mach: f64) -> Result<f64> {
    check_mach(mach)?;
    Ok(1.0 / ((1.0 - mach) * (1.0 + mach)).sqrt())
}

/// `gamma - 1` without cancellation at small `M`.
pub fn gamma_minus_one(mach: f64) -> Result<f64> {
    check_mach(mach)?;
    Ok((-0.5 * (-mach * mach).ln_1p()).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Event {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    /// `c^2 t^2 - x^2 - y^2 - z^2`.
    pub fn interval(&self, c: f64) -> f64 {
        c * c * self.t * self.t - self.x * self.x - self.y * self.y - self.z * self.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `x' = gamma (x - v t)`, `t' = gamma (t - v x / c^2)` with `v = M c`;
/// `Inverse` uses `-v`.
pub fn pgl_transform(e: Event, mach: f64, c: f64, direction: Direction) -> Result<Event> {
    let gamma = lorentz_factor(mach)?;
    let v = match direction {
        Direction::Forward => mach * c,
        Direction::Inverse => -mach * c,
    };
    Ok(Event { t: gamma * (e.t - v * e.x / (c * c)), x: gamma * (e.x - v * e.t), y: e.y, z: e.z })
}

/// Relativistic composition `(v1 + v2) / (1 + v1 v2 / c^2)`.
pub fn compose_velocities(v1: f64, v2: f64, c: f64) -> f64 {
    (v1 + v2) / (1.0 + v1 * v2 / (c * c))
}

/// Observer event and a source moving along `x` at `v_d`, at the origin at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetardedQuery {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
    pub v_d: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetardedSolution {
    pub tau: f64,
    pub r_prime: f64,
    pub tau_newton: f64,
    pub newton_iterations: usize,
    /// `|tau - tau_newton| / (|t| + r'/c)`.
    pub relative_gap: f64,
    /// `|c^2 (t - tau)^2 - (x - v tau)^2 - y^2 - z^2| / (c (t - tau))^2`.
    pub residual: f64,
}

/// Retarded time of the emission reaching the observer. The closed form is
/// the causal (smaller) root of
/// `(1 - M^2) tau^2 - 2 (t - M x / c) tau + t^2 - r^2/c^2 = 0`,
/// evaluated as `t - tau = (M X + sqrt(X^2 + (1 - M^2) rho^2)) / (c (1 - M^2))`
/// with `X = x - v t`, `rho^2 = y^2 + z^2` (or its conjugate form when
/// `M X < 0`). Newton iteration on the defining equation, started from the
/// causal bound `t - R / (c - v)`, is returned alongside as a check.
pub fn retarded_time(query: &RetardedQuery, c: f64) -> Result<RetardedSolution> {
    if !(c > 0.0) {
        return Err(invalid("c must be > 0"));
    }
    let v = query.v_d;
    let mach = v.abs() / c;
    check_mach(mach)?;
    let m = v / c;
    let big_x = query.x - v * query.t;
    let rho2 = query.y * query.y + query.z * query.z;
    let one_m2 = (1.0 - m) * (1.0 + m);
    let root = (big_x * big_x + one_m2 * rho2).sqrt();
    if root == 0.0 {
        return Err(invalid("observer coincides with the source"));
    }
    let mx = m * big_x;
    let delay = if mx >= 0.0 { (mx + root) / (c * one_m2) } else { (big_x * big_x + rho2) / (c * (root - mx)) };
    let tau = query.t - delay;
    let r_prime = c * delay;

    let g = |d: f64| c * c * d * d - (big_x + v * d).powi(2) - rho2;
    let dg = |d: f64| 2.0 * c * c * d - 2.0 * v * (big_x + v * d);
    let r_now = (big_x * big_x + rho2).sqrt();
    let mut d = r_now / (c - v.abs());
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        let step = g(d) / dg(d);
        d -= step;
        if step.abs() <= 1e-16 * d.abs() {
            break;
        }
    }
    let tau_newton = query.t - d;
    let scale = query.t.abs() + delay;
    let residual = (c * c * (query.t - tau).powi(2) - (query.x - v * tau).powi(2) - rho2).abs() / (r_prime * r_prime);
    Ok(RetardedSolution {
        tau,
        r_prime,
        tau_newton,
        newton_iterations: iterations,
        relative_gap: (tau - tau_newton).abs() / scale,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetardedSurvey {
    pub queries: usize,
    pub mach: f64,
    pub max_relative_gap: f64,
    pub max_residual: f64,
    pub max_newton_iterations: usize,
}

/// Closed form against Newton over `n` observer events drawn uniformly from
/// `[-extent, extent]^3 x [-extent/c, extent/c]` (per-query streams of `seed`).
pub fn retarded_survey(n: usize, mach: f64, c: f64, extent: f64, seed: u64) -> Result<RetardedSurvey> {
    use rand::{Rng, SeedableRng};
    check_mach(mach)?;
    if !(extent > 0.0) {
        return Err(invalid("extent must be > 0"));
    }
    let mut out = RetardedSurvey { queries: 0, mach, max_relative_gap: 0.0, max_residual: 0.0, max_newton_iterations: 0 };
    for i in 0..n {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let q = RetardedQuery {
            x: rng.gen_range(-extent..extent),
            y: rng.gen_range(-extent..extent),
            z: rng.gen_range(-extent..extent),
            t: rng.gen_range(-extent / c..extent / c),
            v_d: mach * c,
            q: 1.0,
        };
        let s = retarded_time(&q, c)?;
        out.queries += 1;
        out.max_relative_gap = out.max_relative_gap.max(s.relative_gap);
        out.max_residual = out.max_residual.max(s.residual);
        out.max_newton_iterations = out.max_newton_iterations.max(s.newton_iterations);
    }
    Ok(out)
}

/// `(q / 4 pi) / sqrt((x - v t)^2 + (1 - M^2)(y^2 + z^2))`.
pub fn retarded_field(query: &RetardedQuery, c: f64) -> Result<f64> {
    let mach = query.v_d.abs() / c;
    check_mach(mach)?;
    let big_x = query.x - query.v_d * query.t;
    let d2 = big_x * big_x + (1.0 - mach) * (1.0 + mach) * (query.y * query.y + query.z * query.z);
    if !(d2 > 0.0) {
        return Err(invalid("field evaluated on the source worldline"));
    }
    Ok(query.q / (4.0 * PI * d2.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoostKinematics {
    pub mach: f64,
    pub gamma: f64,
    pub omega_prime: f64,
    pub k_prime: f64,
    pub e_prime: f64,
    pub p_prime: f64,
    pub m_prime: f64,
    /// Proper-time rate `1 / gamma`.
    pub tau_dilated: f64,
}

/// Kinematics of the core oscillation `omega_c` boosted to speed `M c`.
pub fn boosted_kinematics(params: &PhysicalParams, mach: f64) -> Result<BoostKinematics> {
    let gamma = lorentz_factor(mach)?;
    let PhysicalParams { hbar, m, c, .. } = *params;
    let omega_c = params.scales().omega_c;
    let v = mach * c;
    let omega_prime = gamma * omega_c;
    let k_prime = gamma * m * v / hbar;
    Ok(BoostKinematics {
        mach,
        gamma,
        omega_prime,
        k_prime,
        e_prime: hbar * omega_prime,
        p_prime: hbar * k_prime,
        m_prime: gamma * m,
        tau_dilated: 1.0 / gamma,
    })
}

impl BoostKinematics {
    /// `(omega'^2 - c^2 k'^2 - omega_c^2) / omega'^2`.
    pub fn dispersion_residual(&self, params: &PhysicalParams) -> f64 {
        let c = params.c;
        let wc = params.scales().omega_c;
        (self.omega_prime.powi(2) - c * c * self.k_prime.powi(2) - wc * wc) / self.omega_prime.powi(2)
    }

    /// `(E'^2 - p'^2 c^2 - m^2 c^4) / E'^2`.
    pub fn energy_momentum_residual(&self, params: &PhysicalParams) -> f64 {
        let PhysicalParams { m, c, .. } = *params;
        (self.e_prime.powi(2) - (self.p_prime * c).powi(2) - (m * c * c).powi(2)) / self.e_prime.powi(2)
    }

    /// Phase rate of `e^{-i(omega' t - k' x)}` along the worldline `x = v t`:
    /// `-(omega' - k' v)`, which equals `-omega_c / gamma`.
    pub fn worldline_phase_rate(&self, params: &PhysicalParams) -> f64 {
        -(self.omega_prime - self.k_prime * self.mach * params.c)
    }
}

/// Minimum lattice points per wavelength and per period in `kg_residual`.
pub const KG_MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KgResidual {
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    /// L-infinity norm of the discrete operator applied to the boosted wave.
    pub residual: f64,
    /// `residual / omega'^2`.
    pub relative: f64,
}

/// Applies the centred-difference form of
/// `d_tt psi - c^2 d_xx psi + omega_c^2 psi` to `psi = e^{-i omega' t + i k' x}`
/// sampled with `cells` points per period and per wavelength (per Compton
/// wavelength when `k' = 0`).
pub fn kg_residual(mach: f64, params: &PhysicalParams, cells: usize) -> Result<KgResidual> {
    if cells < KG_MIN_CELLS {
        return Err(Error::Unresolved(format!("{cells} cells per wavelength; need >= {KG_MIN_CELLS}")));
    }
    let kin = boosted_kinematics(params, mach)?;
    let c = params.c;
    let omega_c = params.scales().omega_c;
    let (w, k) = (kin.omega_prime, kin.k_prime);
    let wavelength = if k > 0.0 { 2.0 * PI / k } else { params.scales().lambda_c };
    let h = wavelength / cells as f64;
    let dt = 2.0 * PI / w / cells as f64;
    let psi = |n: i64, j: i64| num_complex::Complex64::from_polar(1.0, -w * n as f64 * dt + k * j as f64 * h);
    let span = 2 * cells as i64;
    let mut worst: f64 = 0.0;
    for n in 1..span {
        for j in 1..span {
            let ptt = (psi(n + 1, j) - psi(n, j) * 2.0 + psi(n - 1, j)) / (dt * dt);
            let pxx = (psi(n, j + 1) - psi(n, j) * 2.0 + psi(n, j - 1)) / (h * h);
            worst = worst.max((ptt - pxx * (c * c) + psi(n, j) * (omega_c * omega_c)).norm());
        }
    }
    Ok(KgResidual { cells, h, dt, residual: worst, relative: worst / (w * w) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowMachRow {
    #[serde(rename = "M")]
    pub mach: f64,
    /// `D = gamma omega_c - omega_c - m v^2 / 2 hbar`.
    pub value: f64,
    /// `(3/8) M^4 omega_c`.
    pub reference: f64,
    /// `|value - reference| / reference` (0 at rest).
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowMachTable {
    pub rows: Vec<LowMachRow>,
    /// Least-squares slope of `ln D` against `ln M` over the nonzero `M`.
    pub slope: f64,
}

impl LowMachTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "M,value,reference,error")?;
        for r in &self.rows {
            writeln!(out, "{:?},{:?},{:?},{:?}", r.mach, r.value, r.reference, r.error)?;
        }
        Ok(())
    }
}

/// Boost correction beyond the kinetic frequency, `D(M) / omega_c = (gamma - 1) - M^2/2`.
pub fn low_mach_deviation(params: &PhysicalParams, mach: f64) -> Result<f64> {
    Ok(params.scales().omega_c * (gamma_minus_one(mach)? - 0.5 * mach * mach))
}

pub const LOW_MACH_LIMIT: f64 = 0.2;

pub fn low_mach_check(machs: &[f64], params: &PhysicalParams) -> Result<LowMachTable> {
    if machs.len() < 3 {
        return Err(invalid("low-Mach check needs at least 3 Mach numbers"));
    }
    if let Some(m) = machs.iter().find(|m| !(**m >= 0.0 && **m <= LOW_MACH_LIMIT)) {
        return Err(invalid(format!("Mach number {m} outside [0, {LOW_MACH_LIMIT}]")));
    }
    let omega_c = params.scales().omega_c;
    let mut rows = Vec::with_capacity(machs.len());
    for &m in machs {
        let value = low_mach_deviation(params, m)?;
        let reference = 0.375 * m.powi(4) * omega_c;
        let error = if reference > 0.0 { (value - reference).abs() / reference } else { value.abs() };
        rows.push(LowMachRow { mach: m, value, reference, error });
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.mach > 0.0).map(|r| (r.mach.ln(), r.value.ln())).unzip();
    if x.len() < 2 {
        return Err(invalid("need at least two nonzero Mach numbers for the slope"));
    }
    let slope = crate::schrodinger::least_squares_slope(&x, &y);
    Ok(LowMachTable { rows, slope })
}
