//! Physical constants and the characteristic scales derived from them.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Density floor as a fraction of the reference density.
pub const RHO_FLOOR_FRACTION: f64 = 1e-12;

/// The constants every formula draws on: action `hbar`, vortex mass `m`,
/// sound speed `c` and the far-field reference density `rho_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub m: f64,
    pub c: f64,
    pub rho_ref: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, m: f64, c: f64, rho_ref: f64) -> Result<Self> {
        let p = Self { hbar, m, c, rho_ref };
        p.validate()?;
        Ok(p)
    }

    /// hbar = m = c = rho_ref = 1.
    pub fn natural() -> Self {
        Self { hbar: 1.0, m: 1.0, c: 1.0, rho_ref: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("m", self.m), ("c", self.c), ("rho_ref", self.rho_ref)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Planck's constant h = 2 pi hbar.
    pub fn planck(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// Quantum of specific angular momentum, hbar / m.
    pub fn hbar_over_m(&self) -> f64 {
        self.hbar / self.m
    }

    pub fn rho_floor(&self) -> f64 {
        RHO_FLOOR_FRACTION * self.rho_ref
    }

    pub fn scales(&self) -> CharacteristicScales {
        characteristic_scales(self)
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::natural()
    }
}

/// Lengths, frequencies and square-gradient coefficients fixed by the
/// physical parameters.
///
/// `xi_plus` and `xi_minus` are the correlation lengths `r_c / sqrt(q)` for
/// `q = 4` and `q = 8`. Only `xi_plus` satisfies `kappa = c^2 xi^2`;
/// `c^2 xi_minus^2` equals `kappa / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicScales {
    pub r_c: f64,
    pub omega_c: f64,
    pub lambda_c: f64,
    pub kappa: f64,
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub chi_plus: f64,
    pub chi_minus: f64,
    /// d mu / d rho at the reference density, `c^2 / rho_ref`.
    pub a: f64,
}

impl CharacteristicScales {
    /// Correlation length `r_c / sqrt(q)`.
    pub fn xi_q(&self, q: f64) -> f64 {
        self.r_c / q.sqrt()
    }

    /// Rest energy `hbar * omega_c`; equals `m c^2`.
    pub fn rest_energy(&self, params: &PhysicalParams) -> f64 {
        params.hbar * self.omega_c
    }
}

pub fn characteristic_scales(params: &PhysicalParams) -> CharacteristicScales {
    let PhysicalParams { hbar, m, c, rho_ref } = *params;
    let r_c = hbar / (m * c);
    let a = c * c / rho_ref;
    CharacteristicScales {
        r_c,
        omega_c: m * c * c / hbar,
        lambda_c: 2.0 * PI * r_c,
        kappa: hbar * hbar / (4.0 * m * m),
        xi_plus: r_c / 2.0,
        xi_minus: r_c / 8f64.sqrt(),
        chi_plus: susceptibility(a, CriticalSide::Above),
        chi_minus: susceptibility(a, CriticalSide::Below),
        a,
    }
}

/// Side of the critical temperature for the mean-field formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalSide {
    Above,
    Below,
}

/// Landau coefficient `a = a0 (T - Tc)`. Static evaluator only.
pub fn landau_coefficient(a0: f64, temperature: f64, critical: f64) -> f64 {
    a0 * (temperature - critical)
}

/// Mean-field susceptibility: `1/a` above the critical point, `1/(2|a|)` below.
pub fn susceptibility(a: f64, side: CriticalSide) -> f64 {
    match side {
        CriticalSide::Above => 1.0 / a,
        CriticalSide::Below => 1.0 / (2.0 * a.abs()),
    }
}

/// Square-gradient correlation length: `sqrt(K/a)` above, `sqrt(K/(2|a|))` below.
pub fn correlation_length(capillary: f64, a: f64, side: CriticalSide) -> f64 {
    match side {
        CriticalSide::Above => (capillary / a).sqrt(),
        CriticalSide::Below => (capillary / (2.0 * a.abs())).sqrt(),
    }
}

/// Capillary coefficient `K(rho) = kappa / rho`.
pub fn capillary_coefficient(kappa: f64, rho: f64) -> f64 {
    kappa / rho
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_params() {
        let s = PhysicalParams::natural().scales();
        assert_eq!(s.r_c, 1.0);
        assert_eq!(s.omega_c, 1.0);
        assert_eq!(s.kappa, 0.25);
        assert_eq!(s.xi_plus, 0.5);
        assert_eq!(1.0 * s.xi_plus * s.xi_plus, s.kappa);
        assert!((s.lambda_c - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn heavy_mass() {
        let s = PhysicalParams::new(1.0, 2.0, 1.0, 1.0).unwrap().scales();
        assert_eq!(s.r_c, 0.5);
        assert_eq!(s.omega_c, 2.0);
        assert_eq!(s.kappa, 0.0625);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn mean_field_route_matches_radius_route() {
        // xi from (K, a) with K = kappa/rho and a = c^2/rho reproduces r_c/sqrt(q).
        let p = PhysicalParams::new(1.3, 0.7, 2.1, 0.9).unwrap();
        let s = p.scales();
        let k = capillary_coefficient(s.kappa, p.rho_ref);
        let above = correlation_length(k, s.a, CriticalSide::Above);
        let below = correlation_length(k, s.a, CriticalSide::Below);
        assert!((above - s.xi_q(4.0)).abs() < 1e-14 * above);
        assert!((below - s.xi_q(8.0)).abs() < 1e-14 * below);
        assert!((s.chi_plus - p.rho_ref / (p.c * p.c)).abs() < 1e-15);
        assert!((s.chi_minus - s.chi_plus / 2.0).abs() < 1e-15);
    }

    #[test]
    fn xi_minus_gives_half_kappa() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let s = p.scales();
        assert!((p.c * p.c * s.xi_minus * s.xi_minus - s.kappa / 2.0).abs() < 1e-16);
        assert!(((s.xi_plus / s.xi_minus) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn landau() {
        assert_eq!(landau_coefficient(2.0, 3.0, 1.0), 4.0);
        assert_eq!(susceptibility(-4.0, CriticalSide::Below), 0.125);
    }
}
