//! Measured plane-wave frequencies against `hbar k^2 / 2m` and the acoustic branch `c k`.

use ekfluid::schrodinger::{measure_dispersion, SchrodingerConfig};
use ekfluid::{Grid, PhysicalParams};

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    let g = Grid::centered(&[64], &[2.0 * std::f64::consts::PI])?;
    let cfg = SchrodingerConfig::free(p, g, 0.001)?;
    println!("{:>4} {:>14} {:>14} {:>8} {:>10}", "k", "omega", "hbar k^2/2m", "c k", "rel err");
    for j in 1..=8 {
        let m = measure_dispersion(j as f64, &cfg)?;
        println!("{:>4} {:>14.10} {:>14.10} {:>8.3} {:>10.2e}", m.k, m.omega, m.matter_reference, m.acoustic_reference, m.relative_error());
    }
    Ok(())
}
