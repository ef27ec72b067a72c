//! Characteristic scales for natural units and for a custom parameter set.

use ekfluid::PhysicalParams;

fn main() -> ekfluid::Result<()> {
    for p in [PhysicalParams::natural(), PhysicalParams::new(1.0, 2.0, 0.5, 1.0)?] {
        let s = p.scales();
        println!("hbar={} m={} c={}", p.hbar, p.m, p.c);
        println!("  r_c = {:.6}  omega_c = {:.6}  lambda_c = {:.6}", s.r_c, s.omega_c, s.lambda_c);
        println!("  kappa = {:.6}  c^2 xi_+^2 = {:.6}  c^2 xi_-^2 = {:.6}", s.kappa, p.c * p.c * s.xi_plus.powi(2), p.c * p.c * s.xi_minus.powi(2));
        println!("  hbar omega_c = {:.6}  m c^2 = {:.6}", s.rest_energy(&p), p.m * p.c * p.c);
    }
    Ok(())
}
