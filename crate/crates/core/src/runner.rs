//! Executes one scenario into one output directory and records a manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::{Method, ScenarioConfig, ScenarioKind};
use crate::error::{ConfigIssue, Error, Result};
use crate::grid::{ComplexField, Grid, ScalarField};
use crate::hydro::{equivalence_report, HydroConfig, HydroSolver, HydroState};
use crate::relativity::{self, RetardedQuery};
use crate::schrodinger::{self, SchrodingerConfig};
use crate::snapshot::Snapshot;
use crate::spectral::Spectral;
use crate::trajectory::{self, EnsembleSpec};
use crate::vortex::{self, GridLoop, LoopField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Relative output paths are resolved against this directory when set.
pub const OUTPUT_ROOT_ENV: &str = "EKFLUID_OUTPUT_ROOT";
/// Worker threads for ensemble integration.
pub const THREADS_ENV: &str = "EKFLUID_THREADS";
pub const MANIFEST_NAME: &str = "manifest.json";

/// Exit status for a failed run: bad input, numerical breakdown, or a
/// physics regime (node formation) the scenario cannot decide.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::GridMismatch(_)
        | Error::Supersonic(_)
        | Error::Unresolved(_)
        | Error::LoopTouchesCore { .. }
        | Error::Format(_)
        | Error::Json(_) => EXIT_CONFIG,
        Error::DensityCollapse { .. } | Error::NodeProximity { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_NUMERIC,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: ScenarioKind,
    /// Fully resolved scenario, as TOML.
    pub config: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub inconclusive: bool,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
    /// One-line human summary.
    pub summary: String,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }
}

/// Where a config's outputs go: its `output` path (default: the kind name),
/// relative paths taken under `root`.
pub fn output_dir(cfg: &ScenarioConfig, root: Option<&Path>) -> PathBuf {
    let rel = cfg.output.clone().unwrap_or_else(|| PathBuf::from(cfg.kind.name()));
    match root {
        Some(r) if rel.is_relative() => r.join(rel),
        _ => rel,
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Outputs {
    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), data)?;
        self.files.push(ManifestEntry {
            path: name.to_owned(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.bytes(name, &buf)
    }

    fn snapshot(&mut self, name: &str, snap: Snapshot) -> Result<()> {
        self.bytes(name, &snap.to_bytes())
    }
}

/// Removes the files of an earlier run recorded in its manifest and refuses
/// directories holding anything else.
fn prepare_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let manifest = dir.join(MANIFEST_NAME);
        if manifest.exists() {
            let old: RunManifest = serde_json::from_slice(&std::fs::read(&manifest)?)?;
            for f in &old.files {
                let p = dir.join(&f.path);
                if p.exists() {
                    std::fs::remove_file(p)?;
                }
            }
            std::fs::remove_file(manifest)?;
        }
        if let Some(entry) = std::fs::read_dir(dir)?.next() {
            return Err(Error::Config(vec![ConfigIssue {
                line: None,
                message: format!(
                    "output directory {} holds files not produced by a previous run (e.g. {})",
                    dir.display(),
                    entry?.file_name().to_string_lossy()
                ),
            }]));
        }
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Validates, resolves and runs `cfg`, writing every output plus
/// `manifest.json` under [`output_dir`].
pub fn run(cfg: &ScenarioConfig, root: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let resolved = cfg.resolved();
    let dir = output_dir(&resolved, root);
    prepare_dir(&dir)?;
    let started = now_ms();
    let mut out = Outputs { dir: dir.clone(), files: Vec::new() };
    let config_text = resolved.to_toml()?;
    out.bytes("config.toml", config_text.as_bytes())?;
    let (summary, inconclusive) = dispatch(&resolved, &mut out)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        kind: resolved.kind,
        config: config_text,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        inconclusive,
        files: out.files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join(MANIFEST_NAME), text)?;
    Ok(RunOutcome { output_dir: dir, manifest, summary })
}

fn dispatch(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<(String, bool)> {
    let params = cfg.params();
    let grid = cfg.grid.as_ref().map(|g| g.build()).transpose()?;
    let s = &cfg.solver;
    match cfg.kind {
        ScenarioKind::Scales => {
            let sc = params.scales();
            out.json("scales.json", &sc)?;
            Ok((format!("r_c = {}, omega_c = {}, kappa = {}", sc.r_c, sc.omega_c, sc.kappa), false))
        }
        ScenarioKind::Evolve => {
            let b = cfg.evolve.as_ref().expect("resolved");
            let grid = grid.expect("resolved");
            let psi0 = b.packet.build(grid)?;
            let v = b.potential.sample(grid, &params);
            let (dt, steps) = (s.dt.unwrap(), s.steps.unwrap());
            let (every, snap_every) = (s.observe_every.unwrap(), s.snapshot_every.unwrap());
            if s.method == Some(Method::Hydro) {
                let hcfg = HydroConfig {
                    params,
                    grid,
                    dt,
                    potential: v,
                    include_enthalpy: s.enthalpy.unwrap(),
                    include_korteweg: s.korteweg.unwrap(),
                    kappa: s.kappa,
                };
                evolve_hydro(&psi0, hcfg, steps, every, snap_every, out)
            } else {
                let scfg = SchrodingerConfig::new(params, grid, dt, v)?;
                evolve_schrodinger(&psi0, &scfg, steps, every, snap_every, out)
            }
        }
        ScenarioKind::Equivalence => {
            let b = cfg.equivalence.as_ref().expect("resolved");
            let report = equivalence_report(&b.scenario, &params, &b.resolutions, s.kappa)?;
            out.json("equivalence.json", &report)?;
            let summary = format!(
                "l2_error {:?} over {:?} cells, order {:.2}{}",
                report.l2_error,
                report.grid,
                report.order_estimate,
                if report.inconclusive { " (inconclusive: node formed)" } else { "" }
            );
            Ok((summary, report.inconclusive))
        }
        ScenarioKind::Vortex => {
            let b = cfg.vortex.as_ref().expect("resolved");
            let grid = grid.expect("resolved");
            let psi = vortex::vortex_wavefunction(&grid, &b.vortices, &params)?;
            let theta = vortex::vortex_phase(&grid, &b.vortices)?;
            out.snapshot("psi.ekv", psi.into())?;
            out.snapshot("density.ekv", vortex::vortex_density(&grid, &b.vortices, &params)?.into())?;
            out.snapshot("phase.ekv", theta.clone().into())?;
            out.snapshot("curl.ekv", vortex::discrete_curl(&theta, &params)?.into())?;
            let cores: Vec<[f64; 2]> = b.vortices.iter().map(|v| v.effective_center(&grid)).collect();
            let radius = b.loop_radius.unwrap();
            #[derive(Serialize)]
            struct Row {
                center: [f64; 2],
                n: i32,
                radius: f64,
                gamma: f64,
                quanta: f64,
                winding: i64,
            }
            let mut rows = Vec::new();
            for (v, c) in b.vortices.iter().zip(&cores) {
                let lp = GridLoop::circle(&grid, *c, radius)?;
                let circ = vortex::circulation(LoopField::Phase(&theta), &lp, &cores, &params)?;
                rows.push(Row { center: v.center, n: v.n, radius, gamma: circ.gamma, quanta: circ.quanta, winding: circ.winding });
            }
            out.json("circulation.json", &rows)?;
            let q: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.quanta)).collect();
            Ok((format!("circulation quanta [{}]", q.join(", ")), false))
        }
        ScenarioKind::Born => {
            let b = cfg.born.as_ref().expect("resolved");
            let grid = grid.expect("resolved");
            let dt = s.dt.unwrap();
            let psi0 = b.packet.build(grid)?;
            let truth = SchrodingerConfig::new(params, grid, dt, b.potential.sample(grid, &params))?;
            let guide = match b.guide_potential {
                Some(p) => SchrodingerConfig::new(params, grid, dt, p.sample(grid, &params))?,
                None => truth.clone(),
            };
            let spec = EnsembleSpec {
                n_members: b.n_members,
                seed: cfg.seed,
                substeps: b.substeps,
                record_every: b.record_every,
                sampler: b.sampler,
            };
            let (ens, guided_psi) = trajectory::integrate_ensemble(&psi0, &guide, &spec, b.t_final)?;
            let psi_t = if b.guide_potential.is_some() {
                schrodinger::evolve(&psi0, &truth, (b.t_final / dt).round() as usize)?
            } else {
                guided_psi
            };
            let range = b.range.map(|[lo, hi]| (lo, hi));
            let report =
                trajectory::born_report(ens.final_positions(), grid.rank(), ens.frozen_count(), &psi_t, 0, b.bins, range)?;
            out.json("born.json", &report)?;
            out.csv("histogram.csv", |w| write_histogram(w, &report))?;
            out.snapshot("psi_final.ekv", psi_t.into())?;
            if b.write_trajectories {
                out.csv("trajectories.csv", |w| ens.write_csv(w))?;
            }
            Ok((format!("tv {:.4}, chi2 {:.1}, frozen {}", report.tv_distance, report.chi2, report.frozen_count), false))
        }
        ScenarioKind::DoubleSlit => {
            let b = cfg.double_slit.as_ref().expect("resolved");
            let spec = EnsembleSpec { n_members: b.n_members, seed: cfg.seed, substeps: b.substeps, record_every: 0, sampler: None };
            let run = trajectory::run_double_slit(&b.geometry, &params, s.dt.unwrap(), &spec, b.bins)?;
            out.json("double_slit.json", &run)?;
            out.csv("histogram.csv", |w| write_histogram(w, &run.born))?;
            out.csv("screen.csv", |w| {
                writeln!(w, "y,density")?;
                for (y, d) in run.screen_y.iter().zip(&run.screen) {
                    writeln!(w, "{y:?},{d:?}")?;
                }
                Ok(())
            })?;
            let summary = format!(
                "fringe spacing {:?} (predicted {:.4}), tv {:.4}, frozen {}",
                run.measured_spacing, run.predicted_spacing, run.born.tv_distance, run.born.frozen_count
            );
            Ok((summary, false))
        }
        ScenarioKind::Uncertainty => {
            let b = cfg.uncertainty.as_ref().expect("resolved");
            let survey = schrodinger::uncertainty_survey(&params, grid.expect("resolved"), b.states, b.modes, b.sigma, cfg.seed)?;
            out.json("uncertainty.json", &survey)?;
            out.csv("uncertainty.csv", |w| {
                writeln!(w, "state,product_xp")?;
                for (i, p) in survey.products.iter().enumerate() {
                    writeln!(w, "{i},{p:?}")?;
                }
                Ok(())
            })?;
            Ok((format!("min dx dp {:.6} (bound {}), violations {}", survey.min_product, survey.bound, survey.violations), false))
        }
        ScenarioKind::Dispersion => {
            let b = cfg.dispersion.as_ref().expect("resolved");
            let grid = grid.expect("resolved");
            let scfg = SchrodingerConfig::free(params, grid, s.dt.unwrap())?;
            let l = grid.length(0);
            let rows = b
                .modes
                .iter()
                .map(|&j| schrodinger::measure_dispersion(2.0 * std::f64::consts::PI * j as f64 / l, &scfg))
                .collect::<Result<Vec<_>>>()?;
            let worst = rows.iter().map(|r| r.relative_error()).fold(0.0, f64::max);
            out.csv("dispersion.csv", |w| {
                writeln!(w, "k,omega,matter_reference,acoustic_reference,relative_error")?;
                for r in &rows {
                    writeln!(w, "{:?},{:?},{:?},{:?},{:?}", r.k, r.omega, r.matter_reference, r.acoustic_reference, r.relative_error())?;
                }
                Ok(())
            })?;
            out.json("dispersion.json", &serde_json::json!({ "modes": rows.len(), "max_relative_error": worst }))?;
            Ok((format!("max relative error {worst:.3e} over {} modes", rows.len()), false))
        }
        ScenarioKind::Retarded => {
            let b = cfg.retarded.as_ref().expect("resolved");
            let survey = relativity::retarded_survey(b.queries, b.mach, params.c, b.extent, cfg.seed)?;
            out.json("retarded.json", &survey)?;
            if b.field_cells > 0 {
                out.snapshot("field.ekv", retarded_slice(b.field_cells, b.extent, b.mach, params.c)?.into())?;
            }
            Ok((
                format!("max closed-form/Newton gap {:.2e}, max residual {:.2e}", survey.max_relative_gap, survey.max_residual),
                false,
            ))
        }
        ScenarioKind::LowMach => {
            let b = cfg.low_mach.as_ref().expect("resolved");
            let table = relativity::low_mach_check(&b.machs, &params)?;
            out.csv("low_mach.csv", |w| table.write_csv(w))?;
            out.json("low_mach.json", &table)?;
            let boosts =
                b.boost_machs.iter().map(|&m| relativity::boosted_kinematics(&params, m)).collect::<Result<Vec<_>>>()?;
            out.csv("boost.csv", |w| {
                writeln!(w, "M,gamma,omega_prime,k_prime,dispersion_residual,energy_momentum_residual,worldline_phase_rate")?;
                for k in &boosts {
                    writeln!(
                        w,
                        "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                        k.mach,
                        k.gamma,
                        k.omega_prime,
                        k.k_prime,
                        k.dispersion_residual(&params),
                        k.energy_momentum_residual(&params),
                        k.worldline_phase_rate(&params)
                    )?;
                }
                Ok(())
            })?;
            let kg = b.kg_cells.iter().map(|&n| relativity::kg_residual(b.kg_mach, &params, n)).collect::<Result<Vec<_>>>()?;
            out.json("kg_residual.json", &kg)?;
            Ok((format!("log-log slope {:.4}", table.slope), false))
        }
    }
}

fn write_histogram(w: &mut Vec<u8>, r: &trajectory::BornReport) -> Result<()> {
    writeln!(w, "lo,hi,histogram,target")?;
    for i in 0..r.bins {
        writeln!(w, "{:?},{:?},{:?},{:?}", r.edges[i], r.edges[i + 1], r.histogram[i], r.target[i])?;
    }
    Ok(())
}

/// Field of a source at the origin at `t = 0` on the `z = 0` plane, sampled
/// at cell centres so the source never sits on a sample.
fn retarded_slice(cells: usize, extent: f64, mach: f64, c: f64) -> Result<ScalarField> {
    let h = 2.0 * extent / cells as f64;
    let grid = Grid::new(&[cells, cells], &[h, h], &[-extent + 0.5 * h, -extent + 0.5 * h])?;
    let values = (0..grid.len())
        .map(|i| {
            let p = grid.position(i);
            relativity::retarded_field(&RetardedQuery { x: p[0], y: p[1], z: 0.0, t: 0.0, v_d: mach * c, q: 1.0 }, c)
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid, values)
}

fn evolve_schrodinger(
    psi0: &ComplexField,
    cfg: &SchrodingerConfig,
    steps: usize,
    every: usize,
    snap_every: usize,
    out: &mut Outputs,
) -> Result<(String, bool)> {
    let spectral = Spectral::new(&cfg.grid);
    let mut rows = Vec::new();
    let mut snaps = Vec::new();
    let mut failure = None;
    let cadence = gcd(every, snap_every);
    let psi = schrodinger::evolve_observed(psi0, cfg, steps, cadence, |step, t, psi| {
        if every > 0 && step % every == 0 {
            match schrodinger::observe(t, psi, cfg, &spectral) {
                Ok(r) => rows.push(r),
                Err(e) => failure = failure.take().or(Some(e)),
            }
        }
        if snap_every > 0 && step % snap_every == 0 {
            snaps.push((step, Snapshot::from(psi.clone()).to_bytes()));
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if every > 0 && steps % every != 0 {
        rows.push(schrodinger::observe(steps as f64 * cfg.dt, &psi, cfg, &spectral)?);
    }
    out.csv("observables.csv", |w| schrodinger::write_observables_csv(w, &rows))?;
    for (step, bytes) in snaps {
        out.bytes(&format!("psi_{step:06}.ekv"), &bytes)?;
    }
    out.snapshot("psi_final.ekv", psi.clone().into())?;
    let drift = (psi.norm() / psi0.norm() - 1.0).abs();
    Ok((format!("{steps} split steps, relative norm drift {drift:.2e}"), false))
}

fn evolve_hydro(
    psi0: &ComplexField,
    cfg: HydroConfig,
    steps: usize,
    every: usize,
    snap_every: usize,
    out: &mut Outputs,
) -> Result<(String, bool)> {
    let params = cfg.params;
    let dt = cfg.dt;
    let solver = HydroSolver::new(cfg)?;
    let mut state = HydroState::from_wavefunction(psi0, &params)?;
    let mass0 = state.mass();
    let mut rows = vec![(0.0, mass0, state.rho.min(), 0usize)];
    let mut inconclusive = false;
    for step in 1..=steps {
        let info = match solver.step(&mut state) {
            Ok(info) => info,
            Err(Error::DensityCollapse { cells, total }) => {
                inconclusive = true;
                rows.push((step as f64 * dt, state.mass(), state.rho.min(), cells));
                out.json(
                    "inconclusive.json",
                    &serde_json::json!({ "step": step, "floored_cells": cells, "total_cells": total }),
                )?;
                break;
            }
            Err(e) => return Err(e),
        };
        if snap_every > 0 && step % snap_every == 0 {
            out.snapshot(&format!("rho_{step:06}.ekv"), state.rho.clone().into())?;
            out.snapshot(&format!("phi_{step:06}.ekv"), state.phi.clone().into())?;
        }
        if (every > 0 && step % every == 0) || step == steps {
            rows.push((state.t, state.mass(), info.min_rho, info.floored_cells));
        }
    }
    out.csv("hydro_observables.csv", |w| {
        writeln!(w, "t,mass,min_rho,floored_cells")?;
        for (t, m, r, f) in &rows {
            writeln!(w, "{t:?},{m:?},{r:?},{f}")?;
        }
        Ok(())
    })?;
    out.snapshot("rho_final.ekv", state.rho.clone().into())?;
    out.snapshot("phi_final.ekv", state.phi.clone().into())?;
    out.snapshot("psi_final.ekv", state.to_wavefunction(&params)?.into())?;
    let drift = (state.mass() - mass0).abs() / mass0;
    Ok((format!("hydro evolution to t = {:.6}, relative mass drift {drift:.2e}", state.t), inconclusive))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run_text(text: &str, dir: &Path) -> RunOutcome {
        run(&parse_config(text).unwrap(), Some(dir)).unwrap()
    }

    #[test]
    fn scales_natural_units() {
        let tmp = tempfile::tempdir().unwrap();
        let o = run_text("kind = \"scales\"\n", tmp.path());
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(o.output_dir.join("scales.json")).unwrap()).unwrap();
        assert_eq!(v["r_c"], 1.0);
        assert_eq!(v["omega_c"], 1.0);
        assert_eq!(v["kappa"], 0.25);
        assert_eq!(o.exit_code(), EXIT_OK);
    }

    #[test]
    fn manifest_lists_every_file_and_reruns_match() {
        let tmp = tempfile::tempdir().unwrap();
        let text = "kind = \"evolve\"\nseed = 3\n[solver]\nsteps = 20\nsnapshot_every = 10\nobserve_every = 5\n";
        let a = run_text(text, tmp.path());
        let mut on_disk: Vec<String> = std::fs::read_dir(&a.output_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n != MANIFEST_NAME)
            .collect();
        on_disk.sort();
        let mut listed: Vec<String> = a.manifest.files.iter().map(|f| f.path.clone()).collect();
        listed.sort();
        assert_eq!(on_disk, listed);
        assert!(listed.contains(&"psi_000010.ekv".to_owned()));
        let csv = std::fs::read_to_string(a.output_dir.join("observables.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 5);
        // rerun into the same directory replaces the old outputs
        let b = run_text(text, tmp.path());
        assert_eq!(a.manifest.files, b.manifest.files);
        let cfg = parse_config(&b.manifest.config).unwrap();
        assert_eq!(cfg, parse_config(text).unwrap().resolved());
    }

    #[test]
    fn foreign_files_block_the_directory() {
        let tmp = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(tmp.path().join("scales")).unwrap();
        std::fs::write(tmp.path().join("scales/notes.txt"), "x").unwrap();
        let err = run(&parse_config("kind = \"scales\"\n").unwrap(), Some(tmp.path())).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn seeded_born_run_is_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let text = "kind = \"born\"\nseed = 5\n[grid]\ncells = [128]\nlength = [20.0]\n[solver]\ndt = 0.005\n\
                    [born]\nn_members = 2000\nt_final = 0.2\nwrite_trajectories = true\n";
        let a = run_text(text, &tmp.path().join("a"));
        let b = run_text(text, &tmp.path().join("b"));
        assert_eq!(a.manifest.files, b.manifest.files);
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(a.output_dir.join("born.json")).unwrap()).unwrap();
        assert_eq!(report["N"], 2000);
        assert!(report["tv"].as_f64().unwrap() < 0.1);
    }

    #[test]
    fn hydro_and_relativity_kinds_run() {
        let tmp = tempfile::tempdir().unwrap();
        let o = run_text(
            "kind = \"evolve\"\n[grid]\ncells = [128]\nlength = [40.0]\n[solver]\nmethod = \"hydro\"\ndt = 0.005\nsteps = 20\n\
             [evolve]\nsigma = [2.0]\n",
            tmp.path(),
        );
        assert!(o.manifest.files.iter().any(|f| f.path == "rho_final.ekv"));
        for kind in ["retarded", "low_mach", "uncertainty", "dispersion", "vortex"] {
            let o = run_text(&format!("kind = \"{kind}\"\n"), tmp.path());
            assert_eq!(o.exit_code(), EXIT_OK, "{kind}");
        }
        let v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(tmp.path().join("vortex/circulation.json")).unwrap()).unwrap();
        assert!((v[0]["quanta"].as_f64().unwrap() - 1.0).abs() < 0.02);
        let snap = Snapshot::load(tmp.path().join("retarded/field.ekv")).unwrap();
        assert_eq!(snap.grid().extents(), &[64, 64]);
    }

    #[test]
    fn exit_codes_follow_taxonomy() {
        assert_eq!(exit_code(&Error::Supersonic(1.2)), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::DensityCollapse { cells: 1, total: 2 }), EXIT_INCONCLUSIVE);
        assert_eq!(exit_code(&Error::Numeric("nan".into())), EXIT_NUMERIC);
    }
}
