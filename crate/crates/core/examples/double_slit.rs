//! Two-slit interference: field fringes on the screen and the Bohmian
//! ensemble's y-distribution against |psi|^2.

use ekfluid::schrodinger::SchrodingerConfig;
use ekfluid::trajectory::{
    born_report, double_slit_scenario, fringe_spacing, integrate_ensemble, mirror_asymmetry, screen_profile,
    DoubleSlit, EnsembleSpec,
};
use ekfluid::PhysicalParams;

fn main() -> ekfluid::Result<()> {
    let params = PhysicalParams::natural();
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let setup = double_slit_scenario(&DoubleSlit::default(), &params)?;
    let dt = 0.01;
    let cfg = SchrodingerConfig::new(params, setup.grid, dt, setup.potential.clone())?;
    let spec = EnsembleSpec::new(n, 2024);
    let t_final = (setup.travel_time / (2.0 * dt)).round() * 2.0 * dt;
    let (ens, psi_t) = integrate_ensemble(&setup.psi0, &cfg, &spec, t_final)?;

    let profile = screen_profile(&psi_t, setup.screen_x)?;
    let ys = setup.grid.axis_coords(1);
    let measured = fringe_spacing(&profile, &ys, 12.0);
    println!("T = {t_final:.2}, lambda = {:.3}", setup.lambda_db);
    println!("fringe spacing: measured {measured:?}, predicted {:.3}", setup.predicted_spacing);
    println!("screen mirror asymmetry: {:.2e}", mirror_asymmetry(&profile));

    let born = born_report(ens.final_positions(), 2, ens.frozen_count(), &psi_t, 1, 50, None)?;
    println!("{}", serde_json::to_string(&born)?);
    Ok(())
}
