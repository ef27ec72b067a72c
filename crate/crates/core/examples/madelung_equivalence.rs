//! Hydrodynamic (rho, Phi) evolution against the split-step wavefunction,
//! with the correct capillary coefficient and with it doubled.

use ekfluid::hydro::{equivalence_report, EquivalenceScenario};
use ekfluid::PhysicalParams;

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    for (label, drift_modes) in [("free", 0), ("drifting", 2)] {
        let scenario = EquivalenceScenario { drift_modes, ..Default::default() };
        let r = equivalence_report(&scenario, &p, &[128, 256, 512], None)?;
        println!("{label:>9}: errors {:.2e} {:.2e} {:.2e}, order {:.2}", r.l2_error[0], r.l2_error[1], r.l2_error[2], r.order_estimate);
    }
    let r = equivalence_report(&EquivalenceScenario::default(), &p, &[256], Some(0.5))?;
    println!("kappa doubled: error {:.2e}", r.l2_error[0]);
    Ok(())
}
