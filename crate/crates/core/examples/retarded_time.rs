//! Retarded time for a subsonic source: closed form, Newton check and the
//! field seen in the co-moving (Prandtl-Glauert-Lorentz) frame.

use ekfluid::relativity::{pgl_transform, retarded_field, retarded_survey, retarded_time, Direction, Event, RetardedQuery};

fn main() -> ekfluid::Result<()> {
    let c = 1.0;
    let q = RetardedQuery { x: 4.0, y: 3.0, z: 0.0, t: 2.0, v_d: 0.6, q: 1.0 };
    let s = retarded_time(&q, c)?;
    println!("tau = {:.15} (Newton {:.15}, {} iterations), R' = {:.6}", s.tau, s.tau_newton, s.newton_iterations, s.r_prime);
    let e = pgl_transform(Event::new(q.t, q.x, q.y, q.z), 0.6, c, Direction::Forward)?;
    println!("co-moving event: t' = {:.6}, x' = {:.6}", e.t, e.x);
    println!("field: {:.6}", retarded_field(&q, c)?);
    for m in [0.0, 0.5, 0.9, 0.99] {
        let r = retarded_survey(10_000, m, c, 10.0, 1)?;
        println!("M = {m:<4}: max gap {:.1e}, max residual {:.1e}", r.max_relative_gap, r.max_residual);
    }
    Ok(())
}
