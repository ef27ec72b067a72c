//! Guidance-velocity trajectories through an evolving wavefield, ensemble
//! sampling and Born-rule statistics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::grid::{ComplexField, Grid, ScalarField};
use crate::params::PhysicalParams;
use crate::schrodinger::{SchrodingerConfig, SplitStepper};
use crate::spectral::Spectral;

/// Guidance is refused where the interpolated `|psi|^2` drops below this
/// multiple of the density floor.
pub const NODE_FACTOR: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Cumulative table over cells, then uniform within the cell (rank 1).
    InverseCdf1d,
    /// Uniform proposals accepted against the cell density.
    RejectionNd,
}

impl Sampler {
    pub fn for_rank(rank: usize) -> Self {
        if rank == 1 {
            Sampler::InverseCdf1d
        } else {
            Sampler::RejectionNd
        }
    }
}

/// Generator for ensemble member `index`: one ChaCha stream per member, so
/// draws do not depend on scheduling.
pub fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `n` independent draws from `rho0 / sum(rho0)`, treating each cell as
/// uniformly filled. Positions are flattened `[x0, y0, x1, y1, ...]`.
pub fn sample_initial(rho0: &ScalarField, n: usize, seed: u64, sampler: Sampler) -> Result<Vec<f64>> {
    let grid = rho0.grid;
    let rank = grid.rank();
    if let Some(v) = rho0.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(invalid(format!("sampling density must be >= 0, found {v}")));
    }
    let total: f64 = rho0.values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let h = grid.spacing();
    let place = |cell: usize, rng: &mut ChaCha8Rng, out: &mut [f64]| {
        let x = grid.position(cell);
        for a in 0..rank {
            out[a] = grid.wrap_coord(a, x[a] + (rng.gen::<f64>() - 0.5) * h[a]);
        }
    };
    let mut out = vec![0.0; n * rank];
    match sampler {
        Sampler::InverseCdf1d => {
            if rank != 1 {
                return Err(invalid("inverse-CDF sampling is for rank-1 grids"));
            }
            let mut cdf = Vec::with_capacity(grid.len());
            let mut acc = 0.0;
            for v in &rho0.values {
                acc += v;
                cdf.push(acc / total);
            }
            out.par_chunks_mut(rank).enumerate().for_each(|(m, slot)| {
                let mut rng = member_rng(seed, m);
                let u: f64 = rng.gen();
                let cell = cdf.partition_point(|&c| c <= u).min(grid.len() - 1);
                place(cell, &mut rng, slot);
            });
        }
        Sampler::RejectionNd => {
            let max = rho0.values.iter().cloned().fold(0.0, f64::max);
            let cells = grid.len();
            out.par_chunks_mut(rank).enumerate().for_each(|(m, slot)| {
                let mut rng = member_rng(seed, m);
                loop {
                    let cell = rng.gen_range(0..cells);
                    if rng.gen::<f64>() * max < rho0.values[cell] {
                        place(cell, &mut rng, slot);
                        break;
                    }
                }
            });
        }
    }
    Ok(out)
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// `psi` and its spectral gradient, ready for off-grid evaluation: linear
/// interpolation in 1D, Catmull-Rom bicubic in 2D.
#[derive(Debug, Clone)]
pub struct GuidanceField {
    grid: Grid,
    psi: Vec<Complex64>,
    grad: Vec<Vec<Complex64>>,
    hbar_over_m: f64,
    node_density: f64,
}

impl GuidanceField {
    pub fn new(psi: &ComplexField, params: &PhysicalParams) -> Result<Self> {
        Self::with_spectral(psi, params, &Spectral::new(&psi.grid))
    }

    pub fn with_spectral(psi: &ComplexField, params: &PhysicalParams, sp: &Spectral) -> Result<Self> {
        let grid = psi.grid;
        if grid.rank() > 2 {
            return Err(invalid("guidance interpolation supports rank 1 and 2"));
        }
        grid.ensure_same(sp.grid())?;
        Ok(Self {
            grid,
            psi: psi.values.clone(),
            grad: sp.gradient_complex(&psi.values),
            hbar_over_m: params.hbar_over_m(),
            node_density: NODE_FACTOR * params.rho_floor(),
        })
    }

    /// Interpolated `(psi, grad psi)` at `x`.
    fn sample(&self, x: &[f64]) -> (Complex64, [Complex64; 2]) {
        let g = &self.grid;
        let mut grad = [Complex64::new(0.0, 0.0); 2];
        match g.rank() {
            1 => {
                let n = g.extents()[0];
                let s = (x[0] - g.origin()[0]) / g.spacing()[0];
                let i0 = s.floor();
                let f = s - i0;
                let i = (i0 as i64).rem_euclid(n as i64) as usize;
                let j = (i + 1) % n;
                let lerp = |a: &[Complex64]| a[i] * (1.0 - f) + a[j] * f;
                grad[0] = lerp(&self.grad[0]);
                (lerp(&self.psi), grad)
            }
            _ => {
                let e = g.extents();
                let mut base = [0i64; 2];
                let mut w = [[0.0; 4]; 2];
                for a in 0..2 {
                    let s = (x[a] - g.origin()[a]) / g.spacing()[a];
                    let i0 = s.floor();
                    base[a] = i0 as i64 - 1;
                    w[a] = catmull_rom(s - i0);
                }
                let mut psi = Complex64::new(0.0, 0.0);
                for (p, wp) in w[0].iter().enumerate() {
                    let i = (base[0] + p as i64).rem_euclid(e[0] as i64) as usize;
                    for (q, wq) in w[1].iter().enumerate() {
                        let j = (base[1] + q as i64).rem_euclid(e[1] as i64) as usize;
                        let k = i * e[1] + j;
                        let wt = wp * wq;
                        psi += self.psi[k] * wt;
                        grad[0] += self.grad[0][k] * wt;
                        grad[1] += self.grad[1][k] * wt;
                    }
                }
                (psi, grad)
            }
        }
    }

    /// `(hbar/m) Im(grad psi / psi)` at `x`.
    pub fn velocity(&self, x: &[f64]) -> Result<[f64; 2]> {
        let (psi, grad) = self.sample(x);
        let density = psi.norm_sqr();
        if !(density >= self.node_density) {
            return Err(Error::NodeProximity { position: x.to_vec(), density });
        }
        let mut v = [0.0; 2];
        for a in 0..self.grid.rank() {
            v[a] = self.hbar_over_m * (grad[a] / psi).im;
        }
        Ok(v)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Guidance velocity at one off-grid point.
pub fn guidance_velocity(psi: &ComplexField, x: &[f64], params: &PhysicalParams) -> Result<Vec<f64>> {
    let field = GuidanceField::new(psi, params)?;
    let v = field.velocity(x)?;
    Ok(v[..psi.grid.rank()].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_members: usize,
    pub seed: u64,
    /// The trajectory step is `2 * substeps * dt_field`, so the field is
    /// available at every RK4 stage time.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Keep positions every this many trajectory steps (0: only start and end).
    #[serde(default)]
    pub record_every: usize,
    #[serde(default)]
    pub sampler: Option<Sampler>,
}

fn default_substeps() -> usize {
    1
}

impl EnsembleSpec {
    pub fn new(n_members: usize, seed: u64) -> Self {
        Self { n_members, seed, substeps: 1, record_every: 0, sampler: None }
    }
}

/// Member positions at recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub n_members: usize,
    pub rank: usize,
    pub seed: u64,
    pub dt_traj: f64,
    pub sampler: Sampler,
    pub times: Vec<f64>,
    /// One flattened `[x0, (y0,) x1, ...]` vector per recorded time.
    pub positions: Vec<Vec<f64>>,
    /// Members stopped at a node.
    pub frozen: Vec<bool>,
}

impl TrajectoryEnsemble {
    pub fn initial(&self) -> &[f64] {
        &self.positions[0]
    }

    pub fn final_positions(&self) -> &[f64] {
        self.positions.last().expect("ensemble always records its start")
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|f| **f).count()
    }

    /// Coordinates of one member along one axis at every recorded time.
    pub fn path(&self, member: usize, axis: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[member * self.rank + axis]).collect()
    }

    /// Rows `member,t,x[,y]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let axes = ["x", "y", "z"];
        writeln!(out, "member,t,{}", axes[..self.rank].join(","))?;
        for m in 0..self.n_members {
            for (t, p) in self.times.iter().zip(&self.positions) {
                write!(out, "{m},{t:?}")?;
                for a in 0..self.rank {
                    write!(out, ",{:?}", p[m * self.rank + a])?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Sample members from `|psi0|^2` and co-evolve them with the field to
/// `t_final`. Returns the ensemble and the final field.
pub fn integrate_ensemble(
    psi0: &ComplexField,
    cfg: &SchrodingerConfig,
    spec: &EnsembleSpec,
    t_final: f64,
) -> Result<(TrajectoryEnsemble, ComplexField)> {
    let sampler = spec.sampler.unwrap_or_else(|| Sampler::for_rank(psi0.grid.rank()));
    let start = sample_initial(&psi0.density(), spec.n_members, spec.seed, sampler)?;
    integrate_from(start, psi0, cfg, spec, sampler, t_final)
}

/// Co-evolve given starting positions. Guidance uses RK4 with stage fields
/// taken from the split-step solution at `t`, `t + h/2` and `t + h`.
/// Members that meet a node are frozen in place and flagged.
pub fn integrate_from(
    start: Vec<f64>,
    psi0: &ComplexField,
    cfg: &SchrodingerConfig,
    spec: &EnsembleSpec,
    sampler: Sampler,
    t_final: f64,
) -> Result<(TrajectoryEnsemble, ComplexField)> {
    let grid = psi0.grid;
    grid.ensure_same(&cfg.grid)?;
    let rank = grid.rank();
    if start.len() != spec.n_members * rank {
        return Err(invalid("starting positions do not match n_members"));
    }
    if spec.n_members == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if spec.substeps == 0 {
        return Err(invalid("substeps must be >= 1"));
    }
    let dt_traj = 2.0 * spec.substeps as f64 * cfg.dt;
    let steps = (t_final / dt_traj).round() as usize;
    if (steps as f64 * dt_traj - t_final).abs() > 1e-9 * t_final.max(dt_traj) {
        return Err(invalid(format!("T = {t_final} is not a whole number of trajectory steps {dt_traj}")));
    }
    let stepper = SplitStepper::new(cfg)?;
    let sp = stepper.spectral().clone();
    let params = cfg.params;
    let mut psi = psi0.clone();
    let mut field_now = GuidanceField::with_spectral(&psi, &params, &sp)?;
    let mut pos = start;
    let mut frozen = vec![false; spec.n_members];
    let mut times = vec![0.0];
    let mut record = vec![pos.clone()];
    let h = dt_traj;
    for s in 1..=steps {
        for _ in 0..spec.substeps {
            stepper.step(&mut psi.values);
        }
        let field_mid = GuidanceField::with_spectral(&psi, &params, &sp)?;
        for _ in 0..spec.substeps {
            stepper.step(&mut psi.values);
        }
        let field_end = GuidanceField::with_spectral(&psi, &params, &sp)?;
        let stages = [&field_now, &field_mid, &field_end];
        pos.par_chunks_mut(rank).zip(frozen.par_iter_mut()).for_each(|(x, fz)| {
            if *fz {
                return;
            }
            match rk4_member(x, h, &stages, &grid) {
                Ok(next) => x.copy_from_slice(&next[..rank]),
                Err(_) => *fz = true,
            }
        });
        field_now = field_end;
        if spec.record_every > 0 && s % spec.record_every == 0 && s != steps {
            times.push(s as f64 * h);
            record.push(pos.clone());
        }
    }
    if steps > 0 {
        times.push(steps as f64 * h);
        record.push(pos);
    }
    Ok((
        TrajectoryEnsemble {
            n_members: spec.n_members,
            rank,
            seed: spec.seed,
            dt_traj,
            sampler,
            times,
            positions: record,
            frozen,
        },
        psi,
    ))
}

fn rk4_member(x: &[f64], h: f64, f: &[&GuidanceField; 3], grid: &Grid) -> Result<[f64; 2]> {
    let rank = x.len();
    let at = |base: &[f64], k: &[f64; 2], s: f64| -> [f64; 2] {
        let mut y = [0.0; 2];
        for a in 0..rank {
            y[a] = base[a] + s * k[a];
        }
        y
    };
    let k1 = f[0].velocity(x)?;
    let k2 = f[1].velocity(&at(x, &k1, h / 2.0)[..rank])?;
    let k3 = f[1].velocity(&at(x, &k2, h / 2.0)[..rank])?;
    let k4 = f[2].velocity(&at(x, &k3, h)[..rank])?;
    let mut y = [0.0; 2];
    for a in 0..rank {
        y[a] = grid.wrap_coord(a, x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]));
    }
    Ok(y)
}

/// Histogram of member positions against the `|psi|^2` marginal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BornReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub bins: usize,
    #[serde(skip)]
    pub edges: Vec<f64>,
    #[serde(skip)]
    pub histogram: Vec<f64>,
    #[serde(skip)]
    pub target: Vec<f64>,
    #[serde(rename = "tv")]
    pub tv_distance: f64,
    pub chi2: f64,
    pub frozen_count: usize,
}

pub const BORN_MIN_MEMBERS: usize = 1000;

/// Compare positions projected on `axis` with the marginal of `|psi|^2`
/// over `bins` equal bins spanning `range` (default: the whole axis). Each
/// cell's mass is spread uniformly over its extent, matching the sampler.
pub fn born_report(
    positions: &[f64],
    rank: usize,
    frozen_count: usize,
    psi: &ComplexField,
    axis: usize,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<BornReport> {
    let grid = psi.grid;
    if rank != grid.rank() || axis >= rank {
        return Err(invalid("axis/rank do not match the field"));
    }
    if positions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if positions.len() / rank < BORN_MIN_MEMBERS {
        return Err(invalid(format!("Born comparison needs at least {BORN_MIN_MEMBERS} members")));
    }
    if bins == 0 {
        return Err(invalid("bins must be >= 1"));
    }
    let h = grid.spacing()[axis];
    let (lo, hi) = range.unwrap_or((grid.origin()[axis] - 0.5 * h, grid.origin()[axis] - 0.5 * h + grid.length(axis)));
    if !(hi > lo) {
        return Err(invalid("empty histogram range"));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let full_axis = range.is_none();
    let bin_of = |x: f64| -> Option<usize> {
        let x = if full_axis { lo + (x - lo).rem_euclid(hi - lo) } else { x };
        if x < lo || x >= hi {
            return None;
        }
        Some((((x - lo) / width) as usize).min(bins - 1))
    };
    let mut counts = vec![0.0; bins];
    let mut inside = 0usize;
    for m in 0..positions.len() / rank {
        if let Some(b) = bin_of(positions[m * rank + axis]) {
            counts[b] += 1.0;
            inside += 1;
        }
    }
    if inside == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let n_axis = grid.extents()[axis];
    let stride = grid.stride(axis);
    let mut marginal = vec![0.0; n_axis];
    for (i, z) in psi.values.iter().enumerate() {
        marginal[(i / stride) % n_axis] += z.norm_sqr();
    }
    let mut target = vec![0.0; bins];
    let period = grid.length(axis);
    for (j, &w) in marginal.iter().enumerate() {
        let c = grid.coord(axis, j);
        // the cell may sit one period away from the window
        for shift in [-period, 0.0, period] {
            let (a, b) = (c - 0.5 * h + shift, c + 0.5 * h + shift);
            if b <= lo || a >= hi {
                continue;
            }
            let first = (((a.max(lo) - lo) / width) as usize).min(bins - 1);
            let last = (((b.min(hi) - lo) / width) as usize).min(bins - 1);
            for (bin, t) in target.iter_mut().enumerate().take(last + 1).skip(first) {
                let overlap = (b.min(edges[bin + 1]) - a.max(edges[bin])).max(0.0);
                *t += w * overlap / h;
            }
        }
    }
    let tsum: f64 = target.iter().sum();
    if !(tsum > 0.0) {
        return Err(Error::ZeroNorm);
    }
    target.iter_mut().for_each(|t| *t /= tsum);
    let n = inside as f64;
    let histogram: Vec<f64> = counts.iter().map(|c| c / n).collect();
    let tv_distance = 0.5 * histogram.iter().zip(&target).map(|(p, q)| (p - q).abs()).sum::<f64>();
    let chi2 = counts
        .iter()
        .zip(&target)
        .map(|(o, t)| {
            let e = n * t;
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if *o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    Ok(BornReport { n: inside, bins, edges, histogram, target, tv_distance, chi2, frozen_count })
}

/// Two-slit barrier in the plane with a boosted Gaussian approaching along
/// axis 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlit {
    pub cells: usize,
    pub length: f64,
    pub barrier_x: f64,
    pub thickness: f64,
    pub slit_width: f64,
    pub slit_separation: f64,
    pub v0: f64,
    pub packet_x: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub k0: f64,
    /// Distance from the barrier to the screen plane.
    pub screen_distance: f64,
}

impl Default for DoubleSlit {
    fn default() -> Self {
        Self {
            cells: 256,
            length: 64.0,
            barrier_x: -12.0,
            thickness: 1.0,
            slit_width: 2.0,
            slit_separation: 6.0,
            v0: 50.0,
            packet_x: -20.0,
            sigma_x: 2.0,
            sigma_y: 4.0,
            k0: std::f64::consts::PI,
            screen_distance: 20.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DoubleSlitSetup {
    pub grid: Grid,
    pub potential: ScalarField,
    pub psi0: ComplexField,
    pub screen_x: f64,
    pub lambda_db: f64,
    /// Fraunhofer fringe spacing `lambda L / d`.
    pub predicted_spacing: f64,
    /// Time for the packet centre to travel from its start to the screen.
    pub travel_time: f64,
}

pub fn double_slit_scenario(spec: &DoubleSlit, params: &PhysicalParams) -> Result<DoubleSlitSetup> {
    let grid = Grid::centered(&[spec.cells, spec.cells], &[spec.length, spec.length])?;
    let h = grid.spacing()[0];
    if spec.thickness < 4.0 * h - 1e-12 {
        return Err(invalid(format!("barrier thickness {} is under 4 cells ({})", spec.thickness, 4.0 * h)));
    }
    if spec.slit_width < 2.0 * h {
        return Err(invalid("slit width must span at least 2 cells"));
    }
    if spec.slit_separation - spec.slit_width < 2.0 * h {
        return Err(invalid("slits must be separated by at least 2 cells of barrier"));
    }
    if spec.slit_separation + spec.slit_width >= spec.length {
        return Err(invalid("slits do not fit across the domain"));
    }
    if !(spec.k0 > 0.0) || !(spec.sigma_x > 0.0) || !(spec.sigma_y > 0.0) {
        return Err(invalid("packet needs k0, sigma_x, sigma_y > 0"));
    }
    let half_d = 0.5 * spec.slit_separation;
    let half_w = 0.5 * spec.slit_width;
    let potential = ScalarField::from_fn(grid, |x| {
        let in_wall = (x[0] - spec.barrier_x).abs() <= 0.5 * spec.thickness;
        let in_slit = (x[1].abs() - half_d).abs() < half_w;
        if in_wall && !in_slit {
            spec.v0
        } else {
            0.0
        }
    });
    let psi0 = crate::schrodinger::gaussian_packet(
        grid,
        &[spec.packet_x, 0.0],
        &[spec.sigma_x, spec.sigma_y],
        &[spec.k0, 0.0],
    )?;
    let lambda_db = 2.0 * std::f64::consts::PI / spec.k0;
    let speed = params.hbar_over_m() * spec.k0;
    let screen_x = spec.barrier_x + spec.screen_distance;
    Ok(DoubleSlitSetup {
        grid,
        potential,
        psi0,
        screen_x,
        lambda_db,
        predicted_spacing: lambda_db * spec.screen_distance / spec.slit_separation,
        travel_time: (screen_x - spec.packet_x) / speed,
    })
}

/// Fringe and ensemble statistics from one double-slit run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleSlitRun {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub lambda_db: f64,
    pub predicted_spacing: f64,
    pub measured_spacing: Option<f64>,
    /// `|measured - predicted| / predicted`.
    pub spacing_error: Option<f64>,
    pub asymmetry: f64,
    pub born: BornReport,
    #[serde(skip)]
    pub screen_y: Vec<f64>,
    #[serde(skip)]
    pub screen: Vec<f64>,
}

/// Half-width of the screen window searched for fringe maxima.
pub const FRINGE_WINDOW: f64 = 12.0;

/// Evolves the scenario to the screen arrival time (rounded to a whole
/// number of trajectory steps) and histograms the members along axis 1.
pub fn run_double_slit(
    spec: &DoubleSlit,
    params: &PhysicalParams,
    dt: f64,
    ensemble: &EnsembleSpec,
    bins: usize,
) -> Result<DoubleSlitRun> {
    let setup = double_slit_scenario(spec, params)?;
    let cfg = SchrodingerConfig::new(*params, setup.grid, dt, setup.potential.clone())?;
    let dt_traj = 2.0 * ensemble.substeps.max(1) as f64 * dt;
    let t_final = (setup.travel_time / dt_traj).round().max(1.0) * dt_traj;
    let (ens, psi_t) = integrate_ensemble(&setup.psi0, &cfg, ensemble, t_final)?;
    let screen = screen_profile(&psi_t, setup.screen_x)?;
    let screen_y = setup.grid.axis_coords(1);
    let measured = fringe_spacing(&screen, &screen_y, FRINGE_WINDOW);
    let born = born_report(ens.final_positions(), 2, ens.frozen_count(), &psi_t, 1, bins, None)?;
    Ok(DoubleSlitRun {
        t_final,
        dt,
        lambda_db: setup.lambda_db,
        predicted_spacing: setup.predicted_spacing,
        measured_spacing: measured,
        spacing_error: measured.map(|m| (m - setup.predicted_spacing).abs() / setup.predicted_spacing),
        asymmetry: mirror_asymmetry(&screen),
        born,
        screen_y,
        screen,
    })
}

/// `|psi|^2` along axis 1 on the axis-0 column nearest `x`.
pub fn screen_profile(psi: &ComplexField, x: f64) -> Result<Vec<f64>> {
    let g = psi.grid;
    if g.rank() != 2 {
        return Err(invalid("screen profiles need a rank-2 field"));
    }
    let i = ((g.wrap_coord(0, x) - g.origin()[0]) / g.spacing()[0]).round() as usize % g.extents()[0];
    let ny = g.extents()[1];
    Ok((0..ny).map(|j| psi.values[i * ny + j].norm_sqr()).collect())
}

/// Mean spacing of local maxima of `profile` whose coordinates lie within
/// `half_window` of zero (parabolic sub-cell refinement).
pub fn fringe_spacing(profile: &[f64], coords: &[f64], half_window: f64) -> Option<f64> {
    let n = profile.len();
    let h = coords[1] - coords[0];
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        let (l, c, r) = (profile[i - 1], profile[i], profile[i + 1]);
        if c > l && c >= r && coords[i].abs() <= half_window {
            let curv = l - 2.0 * c + r;
            let off = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
            peaks.push(coords[i] + off * h);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// Largest `|p(y) - p(-y)|` relative to `max p` on a centred axis.
pub fn mirror_asymmetry(profile: &[f64]) -> f64 {
    let n = profile.len();
    let max = profile.iter().cloned().fold(0.0, f64::max);
    (1..n).map(|j| (profile[j] - profile[n - j]).abs()).fold(0.0, f64::max) / max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::{gaussian_packet, packet_report};
    use std::f64::consts::PI;

    fn natural() -> PhysicalParams {
        PhysicalParams::natural()
    }

    #[test]
    fn hot_cell_sampling() {
        let g = Grid::centered(&[64], &[64.0]).unwrap();
        let mut rho = ScalarField::zeros(g);
        rho.values[10] = 3.0;
        for sampler in [Sampler::InverseCdf1d, Sampler::RejectionNd] {
            let xs = sample_initial(&rho, 500, 1, sampler).unwrap();
            let c = g.coord(0, 10);
            assert!(xs.iter().all(|x| (x - c).abs() <= 0.5));
        }
        assert!(matches!(sample_initial(&ScalarField::zeros(g), 5, 1, Sampler::InverseCdf1d), Err(Error::ZeroNorm)));
    }

    #[test]
    fn uniform_sampling_counts() {
        let g = Grid::centered(&[100], &[50.0]).unwrap();
        let n = 100_000;
        let xs = sample_initial(&ScalarField::constant(g, 1.0), n, 7, Sampler::InverseCdf1d).unwrap();
        let mut counts = [0usize; 50];
        for x in &xs {
            let b = ((x + 25.0).floor() as usize).min(49);
            counts[b] += 1;
        }
        let p = 1.0 / 50.0;
        let bound = 4.0 * (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < bound);
        }
    }

    #[test]
    fn gaussian_sampling_moments() {
        let g = Grid::centered(&[512], &[40.0]).unwrap();
        let sigma: f64 = 1.5;
        let rho = ScalarField::from_fn(g, |x| (-x[0] * x[0] / (2.0 * sigma * sigma)).exp());
        let n = 20_000;
        let xs = sample_initial(&rho, n, 3, Sampler::InverseCdf1d).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        // piecewise-constant cells add h^2/12 to the variance
        let want = sigma * sigma + g.spacing()[0].powi(2) / 12.0;
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt());
        assert!((var - want).abs() < 3.0 * want * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn sampling_is_deterministic_per_member() {
        let g = Grid::centered(&[32, 32], &[8.0, 8.0]).unwrap();
        let rho = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let a = sample_initial(&rho, 300, 9, Sampler::RejectionNd).unwrap();
        let b = sample_initial(&rho, 300, 9, Sampler::RejectionNd).unwrap();
        assert_eq!(a, b);
        let c = sample_initial(&rho, 100, 9, Sampler::RejectionNd).unwrap();
        assert_eq!(&a[..200], &c[..]);
    }

    #[test]
    fn plane_wave_and_real_field_velocity() {
        let p = natural();
        let g = Grid::centered(&[32, 32], &[2.0 * PI, 2.0 * PI]).unwrap();
        let wave = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * x[0] - 3.0 * x[1]));
        let v = guidance_velocity(&wave, &[0.123, -1.7], &p).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-10 && (v[1] + 3.0).abs() < 1e-10);
        let real = ComplexField::from_fn(g, |x| Complex64::new(2.0 + x[0].cos(), 0.0));
        let v = guidance_velocity(&real, &[0.3, 0.4], &p).unwrap();
        assert!(v.iter().all(|u| u.abs() < 1e-12));
    }

    #[test]
    fn vortex_guidance_speed() {
        // psi = sin(w x') + i sin(w y') is a periodic vortex lattice; near a
        // core it is w (x' + i y'), whose flow is 1/r to O((w r)^2).
        let p = natural();
        let len = 512.0;
        let g = Grid::centered(&[512, 512], &[len, len]).unwrap();
        let w = 2.0 * PI / len;
        let psi = ComplexField::from_fn(g, |x| Complex64::new((w * (x[0] - 0.5)).sin(), (w * (x[1] - 0.5)).sin()));
        let field = GuidanceField::new(&psi, &p).unwrap();
        for r in [8.0, 10.0, 12.0] {
            for k in 0..8 {
                let a = 2.0 * PI * k as f64 / 8.0 + 0.1;
                let (dx, dy) = (r * a.cos(), r * a.sin());
                let v = field.velocity(&[0.5 + dx, 0.5 + dy]).unwrap();
                let speed = v[0].hypot(v[1]);
                assert!((speed * r - 1.0).abs() < 0.01, "r {r}: {}", speed * r);
                // exact flow of the lattice field
                let z = Complex64::new((w * dx).sin(), (w * dy).sin());
                let exact = [w * (w * dx).cos() * (Complex64::new(1.0, 0.0) / z).im, w * (w * dy).cos() * (Complex64::i() / z).im];
                let err = (v[0] - exact[0]).abs() + (v[1] - exact[1]).abs();
                assert!(err < 1e-5 * speed, "interpolation error {err}");
            }
        }
    }

    #[test]
    fn node_is_reported() {
        let p = natural();
        let g = Grid::centered(&[32], &[2.0 * PI]).unwrap();
        let psi = ComplexField::from_fn(g, |x| Complex64::new(x[0].sin(), 0.0));
        match guidance_velocity(&psi, &[0.0], &p) {
            Err(Error::NodeProximity { position, .. }) => assert_eq!(position, vec![0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plane_wave_members_translate() {
        let p = natural();
        let g = Grid::centered(&[64], &[2.0 * PI * 4.0]).unwrap();
        let k = 0.75;
        let psi0 = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k * x[0]));
        let cfg = SchrodingerConfig::free(p, g, 0.01).unwrap();
        let spec = EnsembleSpec::new(200, 5);
        let (ens, _) = integrate_ensemble(&psi0, &cfg, &spec, 1.0).unwrap();
        for m in 0..200 {
            let d = g.min_image(0, ens.final_positions()[m] - ens.initial()[m]);
            assert!((d - k).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_state_keeps_distribution() {
        let p = natural();
        let g = Grid::centered(&[256], &[20.0]).unwrap();
        let w0: f64 = 1.0;
        let v = ScalarField::from_fn(g, |x| 0.5 * w0 * w0 * x[0] * x[0]);
        let psi0 = gaussian_packet(g, &[0.0], &[(0.5 / w0).sqrt()], &[0.0]).unwrap();
        let cfg = SchrodingerConfig::new(p, g, 0.002, v).unwrap();
        let (ens, psi_t) = integrate_ensemble(&psi0, &cfg, &EnsembleSpec::new(100_000, 11), 1.0).unwrap();
        let r = born_report(ens.final_positions(), 1, ens.frozen_count(), &psi_t, 0, 50, Some((-5.0, 5.0))).unwrap();
        assert!(r.tv_distance < 0.02, "tv {}", r.tv_distance);
        assert!((r.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((r.target.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spreading_gaussian_tracks_variance_and_order() {
        let p = natural();
        let g = Grid::centered(&[512], &[80.0]).unwrap();
        let psi0 = gaussian_packet(g, &[0.0], &[1.0], &[0.0]).unwrap();
        let cfg = SchrodingerConfig::free(p, g, 0.005).unwrap();
        let n = 20_000;
        let spec = EnsembleSpec { record_every: 50, ..EnsembleSpec::new(n, 2) };
        let (ens, psi_t) = integrate_ensemble(&psi0, &cfg, &spec, 2.0).unwrap();
        let xs = ens.final_positions();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let dx = packet_report(&psi_t, &p).unwrap().delta_x;
        let se = dx * dx * (2.0 / n as f64).sqrt();
        assert!((var - dx * dx).abs() < 3.0 * se + 0.01, "var {var} vs {}", dx * dx);
        // no crossing: the initial order is preserved at every record
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ens.initial()[a].partial_cmp(&ens.initial()[b]).unwrap());
        for rec in &ens.positions {
            assert!(order.windows(2).all(|w| rec[w[0]] <= rec[w[1]]));
        }
    }

    #[test]
    fn negative_control_breaks_equivariance() {
        let p = natural();
        let g = Grid::centered(&[256], &[40.0]).unwrap();
        let v = ScalarField::from_fn(g, |x| 0.5 * x[0] * x[0]);
        let psi0 = gaussian_packet(g, &[0.0], &[0.5f64.sqrt()], &[0.0]).unwrap();
        let right = SchrodingerConfig::new(p, g, 0.005, v).unwrap();
        let wrong = SchrodingerConfig::free(p, g, 0.005).unwrap();
        let spec = EnsembleSpec::new(20_000, 4);
        let (ens, _) = integrate_ensemble(&psi0, &wrong, &spec, 2.0).unwrap();
        let psi_t = crate::schrodinger::evolve(&psi0, &right, 400).unwrap();
        let r = born_report(ens.final_positions(), 1, 0, &psi_t, 0, 50, Some((-10.0, 10.0))).unwrap();
        assert!(r.tv_distance > 0.1, "tv {}", r.tv_distance);
    }

    #[test]
    fn runs_are_bit_identical() {
        let p = natural();
        let g = Grid::centered(&[64, 64], &[16.0, 16.0]).unwrap();
        let psi0 = gaussian_packet(g, &[0.0, 0.0], &[1.5, 1.5], &[1.0, 0.0]).unwrap();
        let cfg = SchrodingerConfig::free(p, g, 0.01).unwrap();
        let spec = EnsembleSpec { record_every: 5, ..EnsembleSpec::new(500, 8) };
        let a = integrate_ensemble(&psi0, &cfg, &spec, 0.2).unwrap().0;
        let b = integrate_ensemble(&psi0, &cfg, &spec, 0.2).unwrap().0;
        assert_eq!(a, b);
        assert_eq!(a.times.len(), 3);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("member,t,x,y\n0,0.0,"));
    }

    #[test]
    fn born_report_rejects_empty_and_counts_wrap() {
        let g = Grid::centered(&[64], &[10.0]).unwrap();
        let psi = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(born_report(&[], 1, 0, &psi, 0, 10, None), Err(Error::EmptyEnsemble)));
        let xs: Vec<f64> = (0..1000).map(|i| -5.0 + 10.0 * (i as f64 + 0.5) / 1000.0).collect();
        let r = born_report(&xs, 1, 0, &psi, 0, 10, None).unwrap();
        assert!(r.tv_distance < 1e-3, "tv {}", r.tv_distance);
    }

    #[test]
    fn double_slit_geometry_checks() {
        let p = natural();
        let thin = DoubleSlit { thickness: 0.5, ..Default::default() };
        assert!(double_slit_scenario(&thin, &p).is_err());
        let merged = DoubleSlit { slit_separation: 2.2, ..Default::default() };
        assert!(double_slit_scenario(&merged, &p).is_err());
        let s = double_slit_scenario(&DoubleSlit::default(), &p).unwrap();
        assert!((s.lambda_db - 2.0).abs() < 1e-15);
        assert!((s.predicted_spacing - 20.0 / 3.0).abs() < 1e-12);
        assert!(mirror_asymmetry(&screen_profile(&s.psi0, -20.0).unwrap()) < 1e-12);
    }
}
