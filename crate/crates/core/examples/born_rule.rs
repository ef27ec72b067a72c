//! Ensemble in the harmonic ground state stays |psi|^2-distributed; the same
//! members guided by the wrong (free) dynamics do not.

use ekfluid::schrodinger::{evolve, gaussian_packet, SchrodingerConfig};
use ekfluid::trajectory::{born_report, integrate_ensemble, EnsembleSpec};
use ekfluid::{Grid, PhysicalParams, ScalarField};

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let g = Grid::centered(&[256], &[40.0])?;
    let trap = ScalarField::from_fn(g, |x| 0.5 * x[0] * x[0]);
    let psi0 = gaussian_packet(g, &[0.0], &[0.5f64.sqrt()], &[0.0])?;
    let right = SchrodingerConfig::new(p, g, 0.005, trap)?;
    let wrong = SchrodingerConfig::free(p, g, 0.005)?;
    let spec = EnsembleSpec::new(n, 7);

    let (ens, psi_t) = integrate_ensemble(&psi0, &right, &spec, 2.0)?;
    let r = born_report(ens.final_positions(), 1, ens.frozen_count(), &psi_t, 0, 50, Some((-5.0, 5.0)))?;
    println!("trap:    {}", serde_json::to_string(&r)?);

    let (ens, _) = integrate_ensemble(&psi0, &wrong, &spec, 2.0)?;
    let truth = evolve(&psi0, &right, 400)?;
    let r = born_report(ens.final_positions(), 1, 0, &truth, 0, 50, Some((-10.0, 10.0)))?;
    println!("control: {}", serde_json::to_string(&r)?);
    Ok(())
}
