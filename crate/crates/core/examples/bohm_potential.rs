//! Madelung split of a moving Gaussian and its Bohm potential against the
//! closed form `Q = (hbar^2 / 2m) (1/(2 s^2) - x^2/(4 s^4))`.

use ekfluid::fluid::{bohm_potential, madelung_compose, madelung_decompose};
use ekfluid::schrodinger::gaussian_packet;
use ekfluid::{Grid, PhysicalParams};

fn main() -> ekfluid::Result<()> {
    let p = PhysicalParams::natural();
    let g = Grid::centered(&[256], &[30.0])?;
    let s = 1.5;
    let psi = gaussian_packet(g, &[0.0], &[s], &[0.8])?;
    let pair = madelung_decompose(&psi, p.rho_floor())?;
    let back = madelung_compose(&pair.rho, &pair.theta)?;
    println!("compose(decompose(psi)) relative L2 error: {:.2e}", back.relative_l2(&psi)?);

    let q = bohm_potential(&pair.rho, &p).q;
    let worst = (0..g.len())
        .filter(|&i| g.coord(0, i).abs() <= 3.0)
        .map(|i| {
            let x = g.coord(0, i);
            let exact = 0.5 * (1.0 / (2.0 * s * s) - x * x / (4.0 * s.powi(4)));
            (q.values[i] - exact).abs()
        })
        .fold(0.0, f64::max);
    println!("max |Q - Q_exact| for |x| <= 3: {worst:.2e}");
    Ok(())
}
