//! Boosted core oscillation: invariant residuals, the discrete Klein-Gordon
//! check, and the fourth-order low-Mach correction as CSV.

use ekfluid::relativity::{boosted_kinematics, kg_residual, low_mach_check};
use ekfluid::PhysicalParams;

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    for m in [0.0, 0.3, 0.6, 0.9, 0.99] {
        let k = boosted_kinematics(&p, m)?;
        println!(
            "M = {m:<4} gamma = {:<10.6} dispersion {:+.1e} energy-momentum {:+.1e}",
            k.gamma,
            k.dispersion_residual(&p),
            k.energy_momentum_residual(&p)
        );
    }
    let (a, b) = (kg_residual(0.5, &p, 16)?, kg_residual(0.5, &p, 32)?);
    println!("KG residual 16 -> 32 cells: ratio {:.3}", a.residual / b.residual);
    let t = low_mach_check(&[0.01, 0.02, 0.04, 0.08], &p)?;
    t.write_csv(std::io::stdout().lock())?;
    println!("slope {:.4}", t.slope);
    Ok(())
}
