//! Free Gaussian packet: observable time series as CSV on stdout.

use ekfluid::schrodinger::{evolve_observed, gaussian_packet, observe, write_observables_csv, SchrodingerConfig};
use ekfluid::spectral::Spectral;
use ekfluid::{Grid, PhysicalParams};

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    let g = Grid::centered(&[512], &[80.0])?;
    let cfg = SchrodingerConfig::free(p, g, 0.01)?;
    let sp = Spectral::new(&g);
    let psi0 = gaussian_packet(g, &[-10.0], &[1.0], &[2.0])?;
    let mut rows = Vec::new();
    evolve_observed(&psi0, &cfg, 500, 50, |_, t, psi| rows.push(observe(t, psi, &cfg, &sp).expect("observable")))?;
    write_observables_csv(std::io::stdout().lock(), &rows)?;
    // free spreading: dx(t) = s sqrt(1 + (hbar t / 2 m s^2)^2)
    let last = rows.last().unwrap();
    eprintln!("dx at t = {}: {:.6} (closed form {:.6})", last.t, last.delta_x, (1.0 + (last.t / 2.0).powi(2)).sqrt());
    Ok(())
}
