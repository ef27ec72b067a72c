//! Vortex pair: density/phase snapshots, circulation around each core and
//! around a loop enclosing both.

use ekfluid::hydro::{velocity_from_phase, GradientScheme, PhaseKind};
use ekfluid::snapshot::Snapshot;
use ekfluid::vortex::{circulation, vortex_density, vortex_phase, GridLoop, LoopField, VortexSpec};
use ekfluid::{Grid, PhysicalParams};

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    let g = Grid::centered(&[128, 128], &[64.0, 64.0])?;
    let specs = [VortexSpec::new([-10.0, 0.0], 1), VortexSpec::new([10.0, 0.0], -2)];
    let cores: Vec<[f64; 2]> = specs.iter().map(|s| s.effective_center(&g)).collect();
    let theta = vortex_phase(&g, &specs)?;
    let v = velocity_from_phase(&theta, &p, PhaseKind::Phase, GradientScheme::WrappedDifference);
    for (s, c) in specs.iter().zip(&cores) {
        let lp = GridLoop::circle(&g, *c, 6.0)?;
        let circ = circulation(LoopField::Velocity(&v), &lp, &cores, &p)?;
        println!("vortex n = {:+}: Gamma m / 2 pi hbar = {:.4}", s.n, circ.quanta);
    }
    let both = GridLoop::circle(&g, [0.0, 0.0], 20.0)?;
    println!("both cores: {:.4}", circulation(LoopField::Velocity(&v), &both, &cores, &p)?.quanta);

    let dir = std::env::temp_dir();
    Snapshot::from(vortex_density(&g, &specs, &p)?).save(dir.join("vortex_density.ekv"))?;
    Snapshot::from(theta).save(dir.join("vortex_phase.ekv"))?;
    println!("fields written to {}", dir.display());
    Ok(())
}
