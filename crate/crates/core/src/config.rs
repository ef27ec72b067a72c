//! Scenario files: one TOML document describes one run.
//!
//! ```toml
//! kind = "equivalence"   # evolve | equivalence | vortex | born | double_slit
//!                        # uncertainty | dispersion | retarded | low_mach | scales
//! seed = 7               # default 0
//! output = "runs/eq"     # default "<kind>" under the output root
//! params = "natural"     # or a [params] table: hbar, m, c, rho_ref (default 1)
//!
//! [grid]                 # kinds that sample a field on a mesh
//! cells = [256]
//! length = [40.0]
//!
//! [solver]               # dt, steps, method, enthalpy, korteweg, kappa,
//! kappa = 0.25           # snapshot_every, observe_every (per kind)
//!
//! [equivalence]          # the block named after the kind, all keys optional
//! resolutions = [128, 256, 512]
//! ```
//!
//! Every key is either used by the chosen kind or reported as an error.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::PathBuf;

use crate::error::{ConfigIssue, Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::hydro::{EquivalenceScenario, HydroConfig};
use crate::params::PhysicalParams;
use crate::schrodinger::SchrodingerConfig;
use crate::trajectory::{DoubleSlit, Sampler, BORN_MIN_MEMBERS};
use crate::vortex::VortexSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Evolve,
    Equivalence,
    Vortex,
    Born,
    DoubleSlit,
    Uncertainty,
    Dispersion,
    Retarded,
    LowMach,
    Scales,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 10] = [
        ScenarioKind::Evolve,
        ScenarioKind::Equivalence,
        ScenarioKind::Vortex,
        ScenarioKind::Born,
        ScenarioKind::DoubleSlit,
        ScenarioKind::Uncertainty,
        ScenarioKind::Dispersion,
        ScenarioKind::Retarded,
        ScenarioKind::LowMach,
        ScenarioKind::Scales,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Evolve => "evolve",
            ScenarioKind::Equivalence => "equivalence",
            ScenarioKind::Vortex => "vortex",
            ScenarioKind::Born => "born",
            ScenarioKind::DoubleSlit => "double_slit",
            ScenarioKind::Uncertainty => "uncertainty",
            ScenarioKind::Dispersion => "dispersion",
            ScenarioKind::Retarded => "retarded",
            ScenarioKind::LowMach => "low_mach",
            ScenarioKind::Scales => "scales",
        }
    }

    /// Default mesh, for kinds that take a `[grid]` block.
    fn default_grid(self) -> Option<GridBlock> {
        let g = |cells: Vec<usize>, length: Vec<f64>| Some(GridBlock { cells, length });
        match self {
            ScenarioKind::Evolve | ScenarioKind::Uncertainty => g(vec![256], vec![40.0]),
            ScenarioKind::Born => g(vec![256], vec![20.0]),
            ScenarioKind::Vortex => g(vec![128, 128], vec![64.0, 64.0]),
            ScenarioKind::Dispersion => g(vec![64], vec![2.0 * std::f64::consts::PI]),
            _ => None,
        }
    }

    fn ranks(self) -> &'static [usize] {
        match self {
            ScenarioKind::Evolve => &[1, 2, 3],
            ScenarioKind::Born => &[1, 2],
            ScenarioKind::Vortex => &[2],
            ScenarioKind::Uncertainty | ScenarioKind::Dispersion => &[1],
            _ => &[],
        }
    }

    /// Solver keys this kind reads, with their defaults.
    fn solver_keys(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Evolve => {
                &["dt", "steps", "method", "enthalpy", "korteweg", "kappa", "snapshot_every", "observe_every"]
            }
            ScenarioKind::Equivalence => &["kappa"],
            ScenarioKind::Born | ScenarioKind::DoubleSlit | ScenarioKind::Dispersion => &["dt"],
            _ => &[],
        }
    }

    fn default_dt(self) -> f64 {
        match self {
            ScenarioKind::Born => 0.002,
            ScenarioKind::Dispersion => 0.001,
            _ => 0.01,
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `"natural"` or an explicit table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ParamsBlock {
    #[default]
    Natural,
    Values(PhysicalParams),
}

impl ParamsBlock {
    pub fn resolve(&self) -> PhysicalParams {
        match self {
            ParamsBlock::Natural => PhysicalParams::natural(),
            ParamsBlock::Values(p) => *p,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamTable {
    hbar: f64,
    m: f64,
    c: f64,
    #[serde(default = "one")]
    rho_ref: f64,
}

fn one() -> f64 {
    1.0
}

impl Serialize for ParamsBlock {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ParamsBlock::Natural => s.serialize_str("natural"),
            ParamsBlock::Values(p) => p.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ParamsBlock {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match toml::Value::deserialize(d)? {
            toml::Value::String(s) if s == "natural" => Ok(ParamsBlock::Natural),
            toml::Value::String(s) => Err(D::Error::custom(format!("unknown units \"{s}\", expected \"natural\""))),
            v @ toml::Value::Table(_) => {
                let t = ParamTable::deserialize(v).map_err(|e| D::Error::custom(e.message().to_owned()))?;
                Ok(ParamsBlock::Values(PhysicalParams { hbar: t.hbar, m: t.m, c: t.c, rho_ref: t.rho_ref }))
            }
            _ => Err(D::Error::custom("params must be \"natural\" or a table")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub cells: Vec<usize>,
    pub length: Vec<f64>,
}

impl GridBlock {
    pub fn build(&self) -> Result<Grid> {
        Grid::centered(&self.cells, &self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    SplitStep,
    Hydro,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enthalpy: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub korteweg: Option<bool>,
    /// Capillary coefficient override (default `hbar^2 / 4m^2`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Write the field every this many steps (0: final field only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe_every: Option<usize>,
}

impl SolverBlock {
    fn is_empty(&self) -> bool {
        *self == SolverBlock::default()
    }

    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let flags = [
            ("dt", self.dt.is_some()),
            ("steps", self.steps.is_some()),
            ("method", self.method.is_some()),
            ("enthalpy", self.enthalpy.is_some()),
            ("korteweg", self.korteweg.is_some()),
            ("kappa", self.kappa.is_some()),
            ("snapshot_every", self.snapshot_every.is_some()),
            ("observe_every", self.observe_every.is_some()),
        ];
        for (k, present) in flags {
            if present {
                keys.push(k);
            }
        }
        keys
    }
}

/// External potential.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    None,
    /// `m omega^2 |x|^2 / 2`.
    Harmonic { omega: f64 },
}

impl PotentialSpec {
    pub fn sample(&self, grid: Grid, params: &PhysicalParams) -> ScalarField {
        match *self {
            PotentialSpec::None => ScalarField::zeros(grid),
            PotentialSpec::Harmonic { omega } => {
                let rank = grid.rank();
                ScalarField::from_fn(grid, |x| 0.5 * params.m * omega * omega * x[..rank].iter().map(|v| v * v).sum::<f64>())
            }
        }
    }

    /// Ground-state width `sqrt(hbar / 2 m omega)`, if confining.
    fn ground_sigma(&self, params: &PhysicalParams) -> Option<f64> {
        match *self {
            PotentialSpec::Harmonic { omega } if omega > 0.0 => Some((params.hbar / (2.0 * params.m * omega)).sqrt()),
            _ => None,
        }
    }
}

/// Gaussian packet; vectors have one entry per grid axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<Vec<f64>>,
}

impl PacketBlock {
    fn resolve(&mut self, rank: usize, sigma: f64) {
        self.center.get_or_insert_with(|| vec![0.0; rank]);
        self.sigma.get_or_insert_with(|| vec![sigma; rank]);
        self.k0.get_or_insert_with(|| vec![0.0; rank]);
    }

    pub fn build(&self, grid: Grid) -> Result<crate::ComplexField> {
        let rank = grid.rank();
        let (z, s) = (vec![0.0; rank], vec![1.0; rank]);
        crate::schrodinger::gaussian_packet(
            grid,
            self.center.as_deref().unwrap_or(&z),
            self.sigma.as_deref().unwrap_or(&s),
            self.k0.as_deref().unwrap_or(&z),
        )
    }

    fn check(&self, rank: usize, table: &str, issues: &mut Vec<Issue>) {
        for (key, v) in [("center", &self.center), ("sigma", &self.sigma), ("k0", &self.k0)] {
            if let Some(v) = v {
                if v.len() != rank {
                    issues.push(Issue::at(table, key, format!("{key} has {} entries for a rank-{rank} grid", v.len())));
                }
            }
        }
        if let Some(s) = &self.sigma {
            if s.iter().any(|s| !(*s > 0.0)) {
                issues.push(Issue::at(table, "sigma", "sigma must be > 0"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveBlock {
    #[serde(flatten)]
    pub packet: PacketBlock,
    pub potential: PotentialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceBlock {
    pub resolutions: Vec<usize>,
    pub scenario: EquivalenceScenario,
}

impl Default for EquivalenceBlock {
    fn default() -> Self {
        Self { resolutions: vec![128, 256, 512], scenario: EquivalenceScenario::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VortexBlock {
    pub vortices: Vec<VortexSpec>,
    /// Radius of the circulation loop around each vortex (default 8 cells).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_radius: Option<f64>,
}

impl Default for VortexBlock {
    fn default() -> Self {
        Self { vortices: vec![VortexSpec::new([0.0, 0.0], 1)], loop_radius: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BornBlock {
    pub n_members: usize,
    pub bins: usize,
    pub t_final: f64,
    pub substeps: usize,
    pub record_every: usize,
    pub write_trajectories: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Sampler>,
    /// Histogram range on axis 0 (default: the whole axis).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    /// Initial packet (default: ground state of `potential`, else width 1).
    pub packet: PacketBlock,
    pub potential: PotentialSpec,
    /// Negative control: guide members with this potential instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guide_potential: Option<PotentialSpec>,
}

impl Default for BornBlock {
    fn default() -> Self {
        Self {
            n_members: 100_000,
            bins: 50,
            t_final: 1.0,
            substeps: 1,
            record_every: 0,
            write_trajectories: false,
            sampler: None,
            range: None,
            packet: PacketBlock::default(),
            potential: PotentialSpec::Harmonic { omega: 1.0 },
            guide_potential: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlitBlock {
    pub n_members: usize,
    pub bins: usize,
    pub substeps: usize,
    pub geometry: DoubleSlit,
}

impl Default for DoubleSlitBlock {
    fn default() -> Self {
        Self { n_members: 100_000, bins: 50, substeps: 1, geometry: DoubleSlit::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyBlock {
    pub states: usize,
    pub modes: usize,
    pub sigma: f64,
}

impl Default for UncertaintyBlock {
    fn default() -> Self {
        Self { states: 100, modes: 8, sigma: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionBlock {
    /// Lattice indices `j`, `k = 2 pi j / L`.
    pub modes: Vec<i64>,
}

impl Default for DispersionBlock {
    fn default() -> Self {
        Self { modes: (1..=8).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetardedBlock {
    pub mach: f64,
    pub queries: usize,
    pub extent: f64,
    /// Cells per axis of the `z = 0`, `t = 0` field slice (0: none).
    pub field_cells: usize,
}

impl Default for RetardedBlock {
    fn default() -> Self {
        Self { mach: 0.5, queries: 10_000, extent: 10.0, field_cells: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowMachBlock {
    pub machs: Vec<f64>,
    pub boost_machs: Vec<f64>,
    pub kg_mach: f64,
    pub kg_cells: Vec<usize>,
}

impl Default for LowMachBlock {
    fn default() -> Self {
        Self {
            machs: vec![0.01, 0.02, 0.04, 0.08],
            boost_machs: vec![0.0, 0.3, 0.6, 0.9, 0.99],
            kg_mach: 0.5,
            kg_cells: vec![16, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default, skip_serializing_if = "SolverBlock::is_empty")]
    pub solver: SolverBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vortex: Option<VortexBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub born: Option<BornBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double_slit: Option<DoubleSlitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retarded: Option<RetardedBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_mach: Option<LowMachBlock>,
}

/// A problem tied to a `table.key` path, located in the source afterwards.
#[derive(Debug, Clone)]
struct Issue {
    table: String,
    key: String,
    message: String,
}

impl Issue {
    fn at(table: &str, key: &str, message: impl Into<String>) -> Self {
        Self { table: table.to_owned(), key: key.to_owned(), message: message.into() }
    }
}

impl ScenarioConfig {
    /// Minimal config of the given kind; everything else defaulted.
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            seed: 0,
            output: None,
            params: ParamsBlock::Natural,
            grid: None,
            solver: SolverBlock::default(),
            evolve: None,
            equivalence: None,
            vortex: None,
            born: None,
            double_slit: None,
            uncertainty: None,
            dispersion: None,
            retarded: None,
            low_mach: None,
        }
    }

    pub fn params(&self) -> PhysicalParams {
        self.params.resolve()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// The same config with every default written out.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        let kind = self.kind;
        if c.grid.is_none() {
            c.grid = kind.default_grid();
        }
        let rank = c.grid.as_ref().map_or(1, |g| g.cells.len());
        let keys = kind.solver_keys();
        let s = &mut c.solver;
        if keys.contains(&"dt") {
            s.dt.get_or_insert(kind.default_dt());
        }
        if kind == ScenarioKind::Evolve {
            s.steps.get_or_insert(100);
            let method = *s.method.get_or_insert(Method::SplitStep);
            s.snapshot_every.get_or_insert(0);
            s.observe_every.get_or_insert(10);
            if method == Method::Hydro {
                s.enthalpy.get_or_insert(false);
                s.korteweg.get_or_insert(true);
            }
        }
        let params = self.params();
        match kind {
            ScenarioKind::Evolve => {
                let b = c.evolve.get_or_insert_with(Default::default);
                let sigma = b.potential.ground_sigma(&params).unwrap_or(1.0);
                b.packet.resolve(rank, sigma);
            }
            ScenarioKind::Equivalence => {
                c.equivalence.get_or_insert_with(Default::default);
            }
            ScenarioKind::Vortex => {
                let cells = c.grid.as_ref().map(|g| g.length[0] / g.cells[0] as f64).unwrap_or(1.0);
                c.vortex.get_or_insert_with(Default::default).loop_radius.get_or_insert(8.0 * cells);
            }
            ScenarioKind::Born => {
                let b = c.born.get_or_insert_with(Default::default);
                let sigma = b.potential.ground_sigma(&params).unwrap_or(1.0);
                b.packet.resolve(rank, sigma);
            }
            ScenarioKind::DoubleSlit => {
                c.double_slit.get_or_insert_with(Default::default);
            }
            ScenarioKind::Uncertainty => {
                c.uncertainty.get_or_insert_with(Default::default);
            }
            ScenarioKind::Dispersion => {
                c.dispersion.get_or_insert_with(Default::default);
            }
            ScenarioKind::Retarded => {
                c.retarded.get_or_insert_with(Default::default);
            }
            ScenarioKind::LowMach => {
                c.low_mach.get_or_insert_with(Default::default);
            }
            ScenarioKind::Scales => {}
        }
        c
    }

    /// Validates the config, returning every problem found.
    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.into_iter().map(|i| ConfigIssue { line: None, message: describe(&i) }).collect()))
        }
    }

    fn blocks_present(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("evolve", self.evolve.is_some()),
            ("equivalence", self.equivalence.is_some()),
            ("vortex", self.vortex.is_some()),
            ("born", self.born.is_some()),
            ("double_slit", self.double_slit.is_some()),
            ("uncertainty", self.uncertainty.is_some()),
            ("dispersion", self.dispersion.is_some()),
            ("retarded", self.retarded.is_some()),
            ("low_mach", self.low_mach.is_some()),
        ]
    }

    fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let kind = self.kind;
        for (name, present) in self.blocks_present() {
            if present && name != kind.name() {
                out.push(Issue::at(name, "", format!("[{name}] does not apply to kind \"{kind}\"")));
            }
        }
        let allowed = kind.solver_keys();
        for key in self.solver.present_keys() {
            if !allowed.contains(&key) {
                out.push(Issue::at("solver", key, format!("solver.{key} is not used by kind \"{kind}\"")));
            }
        }
        if self.grid.is_some() && kind.default_grid().is_none() {
            out.push(Issue::at("grid", "", format!("[grid] is not used by kind \"{kind}\"")));
        }
        if i64::try_from(self.seed).is_err() {
            out.push(Issue::at("", "seed", "seed must fit a TOML integer (at most 2^63 - 1)"));
        }
        if let ParamsBlock::Values(p) = &self.params {
            if let Err(e) = p.validate() {
                out.push(Issue::at("params", "", e.to_string()));
            }
        }
        if !out.is_empty() {
            return out;
        }

        let r = self.resolved();
        let params = r.params();
        let grid = match &r.grid {
            Some(g) => {
                if g.cells.len() != g.length.len() {
                    out.push(Issue::at("grid", "length", "cells and length must have the same number of axes"));
                    return out;
                }
                if !kind.ranks().contains(&g.cells.len()) {
                    out.push(Issue::at(
                        "grid",
                        "cells",
                        format!("kind \"{kind}\" needs a grid of rank {:?}, got {}", kind.ranks(), g.cells.len()),
                    ));
                    return out;
                }
                match g.build() {
                    Ok(grid) => Some(grid),
                    Err(e) => {
                        out.push(Issue::at("grid", "cells", e.to_string()));
                        return out;
                    }
                }
            }
            None => None,
        };
        let s = &r.solver;
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                out.push(Issue::at("solver", "dt", format!("dt must be > 0, got {dt}")));
                return out;
            }
        }
        if let Some(k) = s.kappa {
            if !(k > 0.0 && k.is_finite()) {
                out.push(Issue::at("solver", "kappa", format!("kappa must be > 0, got {k}")));
            }
        }
        let stability = |e: Error| Issue::at("solver", "dt", e.to_string());
        match kind {
            ScenarioKind::Evolve => {
                let (g, b) = (grid.unwrap(), r.evolve.as_ref().unwrap());
                b.packet.check(g.rank(), "evolve", &mut out);
                let v = b.potential.sample(g, &params);
                let dt = s.dt.unwrap();
                if s.method == Some(Method::Hydro) {
                    let cfg = HydroConfig {
                        params,
                        grid: g,
                        dt,
                        potential: v,
                        include_enthalpy: s.enthalpy.unwrap(),
                        include_korteweg: s.korteweg.unwrap(),
                        kappa: s.kappa,
                    };
                    if let Err(e) = cfg.validate() {
                        out.push(stability(e));
                    }
                } else {
                    for key in ["enthalpy", "korteweg", "kappa"] {
                        if self.solver.present_keys().contains(&key) {
                            out.push(Issue::at("solver", key, format!("solver.{key} needs method = \"hydro\"")));
                        }
                    }
                    if let Err(e) = SchrodingerConfig::new(params, g, dt, v) {
                        out.push(stability(e));
                    }
                }
            }
            ScenarioKind::Equivalence => {
                let b = r.equivalence.as_ref().unwrap();
                if b.resolutions.is_empty() {
                    out.push(Issue::at("equivalence", "resolutions", "at least one resolution is required"));
                }
                for &n in &b.resolutions {
                    if let Err(e) = b.scenario.build(&params, n, s.kappa) {
                        out.push(Issue::at("equivalence", "resolutions", format!("{n} cells: {e}")));
                    }
                }
            }
            ScenarioKind::Vortex => {
                let b = r.vortex.as_ref().unwrap();
                if b.vortices.is_empty() {
                    out.push(Issue::at("vortex", "vortices", "at least one vortex is required"));
                }
                let g = grid.unwrap();
                for (i, v) in b.vortices.iter().enumerate() {
                    if v.n == 0 {
                        out.push(Issue::at("vortex", "vortices", format!("vortex {i} has winding 0")));
                    }
                    for a in 0..2 {
                        let half = 0.5 * g.length(a);
                        if !(v.center[a] >= -half && v.center[a] < half) {
                            out.push(Issue::at("vortex", "vortices", format!("vortex {i} centre lies outside the grid")));
                        }
                    }
                }
                if !(b.loop_radius.unwrap() > 0.0) {
                    out.push(Issue::at("vortex", "loop_radius", "loop_radius must be > 0"));
                }
            }
            ScenarioKind::Born => {
                let (g, b) = (grid.unwrap(), r.born.as_ref().unwrap());
                b.packet.check(g.rank(), "born", &mut out);
                if b.n_members < BORN_MIN_MEMBERS {
                    out.push(Issue::at("born", "n_members", format!("n_members must be >= {BORN_MIN_MEMBERS}")));
                }
                if b.bins == 0 {
                    out.push(Issue::at("born", "bins", "bins must be > 0"));
                }
                if b.substeps == 0 {
                    out.push(Issue::at("born", "substeps", "substeps must be >= 1"));
                }
                let dt_traj = 2.0 * b.substeps.max(1) as f64 * s.dt.unwrap();
                let steps = (b.t_final / dt_traj).round();
                if !(b.t_final > 0.0) || (steps * dt_traj - b.t_final).abs() > 1e-9 * b.t_final {
                    out.push(Issue::at(
                        "born",
                        "t_final",
                        format!("t_final must be a positive multiple of the trajectory step {dt_traj}"),
                    ));
                }
                if let Some([lo, hi]) = b.range {
                    if !(lo < hi) {
                        out.push(Issue::at("born", "range", "range must be increasing"));
                    }
                }
                for (key, pot) in [("potential", Some(b.potential)), ("guide_potential", b.guide_potential)] {
                    if let Some(pot) = pot {
                        if let Err(e) = SchrodingerConfig::new(params, g, s.dt.unwrap(), pot.sample(g, &params)) {
                            out.push(Issue::at("born", key, e.to_string()));
                        }
                    }
                }
            }
            ScenarioKind::DoubleSlit => {
                let b = r.double_slit.as_ref().unwrap();
                if b.n_members < BORN_MIN_MEMBERS {
                    out.push(Issue::at("double_slit", "n_members", format!("n_members must be >= {BORN_MIN_MEMBERS}")));
                }
                if b.bins == 0 || b.substeps == 0 {
                    out.push(Issue::at("double_slit", "", "bins and substeps must be > 0"));
                }
                match crate::trajectory::double_slit_scenario(&b.geometry, &params) {
                    Ok(setup) => {
                        if let Err(e) = SchrodingerConfig::new(params, setup.grid, s.dt.unwrap(), setup.potential) {
                            out.push(stability(e));
                        }
                    }
                    Err(e) => out.push(Issue::at("double_slit.geometry", "", e.to_string())),
                }
            }
            ScenarioKind::Uncertainty => {
                let b = r.uncertainty.as_ref().unwrap();
                let g = grid.unwrap();
                if !(b.sigma > 0.0 && 8.0 * b.sigma < g.length(0)) {
                    out.push(Issue::at("uncertainty", "sigma", "sigma must satisfy 0 < 8 sigma < L"));
                }
                if b.states == 0 {
                    out.push(Issue::at("uncertainty", "states", "states must be > 0"));
                }
            }
            ScenarioKind::Dispersion => {
                let (g, b) = (grid.unwrap(), r.dispersion.as_ref().unwrap());
                let half = g.extents()[0] as i64 / 2;
                if b.modes.is_empty() || b.modes.iter().any(|&j| j == 0 || j.abs() >= half) {
                    out.push(Issue::at("dispersion", "modes", format!("modes must be nonzero with |j| < {half}")));
                }
                if let Err(e) = SchrodingerConfig::free(params, g, s.dt.unwrap()) {
                    out.push(stability(e));
                }
            }
            ScenarioKind::Retarded => {
                let b = r.retarded.as_ref().unwrap();
                if !(b.mach >= 0.0) {
                    out.push(Issue::at("retarded", "mach", "mach must be >= 0"));
                } else if b.mach >= 1.0 {
                    out.push(Issue::at("retarded", "mach", Error::Supersonic(b.mach).to_string()));
                }
                if !(b.extent > 0.0) {
                    out.push(Issue::at("retarded", "extent", "extent must be > 0"));
                }
                if b.field_cells != 0 && (b.field_cells < 8 || b.field_cells % 2 != 0) {
                    out.push(Issue::at("retarded", "field_cells", "field_cells must be 0 or even and >= 8"));
                }
            }
            ScenarioKind::LowMach => {
                let b = r.low_mach.as_ref().unwrap();
                let lim = crate::relativity::LOW_MACH_LIMIT;
                if b.machs.len() < 3 || b.machs.iter().any(|m| !(*m >= 0.0 && *m <= lim)) {
                    out.push(Issue::at("low_mach", "machs", format!("need at least 3 Mach numbers in [0, {lim}]")));
                }
                for &m in b.boost_machs.iter().chain([b.kg_mach].iter()) {
                    if !(m >= 0.0) {
                        out.push(Issue::at("low_mach", "boost_machs", format!("Mach number {m} must be >= 0")));
                    } else if m >= 1.0 {
                        out.push(Issue::at("low_mach", "boost_machs", Error::Supersonic(m).to_string()));
                    }
                }
                if b.kg_cells.iter().any(|&n| n < crate::relativity::KG_MIN_CELLS) {
                    out.push(Issue::at(
                        "low_mach",
                        "kg_cells",
                        format!("kg_cells must be >= {}", crate::relativity::KG_MIN_CELLS),
                    ));
                }
            }
            ScenarioKind::Scales => {}
        }
        out
    }
}

fn describe(i: &Issue) -> String {
    i.message.clone()
}

/// 1-based line of `table.key` (or of the table header when `key` is empty
/// or absent) in TOML source.
fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_owned();
            if !key.is_empty() && current == format!("{table}.{key}") {
                return Some(n + 1);
            }
            if current == table && header.is_none() {
                header = Some(n + 1);
            }
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        if key.is_empty() {
            // `table = ...` written inline at its parent level
            let (parent, leaf) = table.rsplit_once('.').unwrap_or(("", table));
            if current == parent && k == leaf {
                return Some(n + 1);
            }
        } else if (current == table && k == key) || (current.is_empty() && k == format!("{table}.{key}")) {
            return Some(n + 1);
        }
    }
    header
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// For "unknown field `k`" errors whose span covers a whole table, the line
/// of `k = ...` at or after `start`.
fn unknown_key_line(text: &str, start: usize, message: &str) -> Option<usize> {
    let name = message.strip_prefix("unknown field `")?.split('`').next()?;
    let first = line_of(text, start);
    text.lines().enumerate().skip(first - 1).find_map(|(n, l)| {
        let (k, _) = l.split_once('=')?;
        (k.trim() == name).then_some(n + 1)
    })
}

/// Parses and validates a scenario file. All problems found are reported,
/// each with its source line where known.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().trim();
        let line = e.span().map(|s| unknown_key_line(text, s.start, message).unwrap_or_else(|| line_of(text, s.start)));
        Error::Config(vec![ConfigIssue { line, message: message.to_owned() }])
    })?;
    let issues = cfg.issues();
    if issues.is_empty() {
        return Ok(cfg);
    }
    Err(Error::Config(
        issues
            .iter()
            .map(|i| ConfigIssue { line: locate(text, &i.table, &i.key), message: describe(i) })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_equivalence_fills_defaults() {
        let c = parse_config("kind = \"equivalence\"\n").unwrap();
        assert_eq!(c.params(), PhysicalParams::natural());
        let r = c.resolved();
        let b = r.equivalence.unwrap();
        assert_eq!(b.resolutions, vec![128, 256, 512]);
        assert_eq!(b.scenario, EquivalenceScenario::default());
        assert!(r.grid.is_none());
    }

    #[test]
    fn small_ensembles_rejected() {
        let v = issues("kind = \"born\"\n[born]\nn_members = 10\n");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, Some(3));
        assert!(v[0].message.contains("1000"));
    }

    #[test]
    fn supersonic_retarded_rejected() {
        let v = issues("kind = \"retarded\"\n[retarded]\nmach = 1.2\n");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, Some(3));
        assert!(v[0].message.contains("supersonic"));
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let v = issues("kind = \"scales\"\n\n[params]\nhbar = 1.0\nm = 1.0\nc = 1.0\nmass = 2.0\n");
        assert_eq!(v[0].line, Some(7), "{v:?}");
        let v = issues("kind = \"born\"\n[born]\nn_member = 10\n");
        assert_eq!(v[0].line, Some(3));
        assert!(v[0].message.contains("n_member"));
        let v = issues("kind = \"dispersion\"\ncolour = 1\n");
        assert!(v[0].message.contains("colour"));
    }

    #[test]
    fn keys_foreign_to_the_kind_rejected() {
        let text = "kind = \"scales\"\n[grid]\ncells = [64]\nlength = [1.0]\n[solver]\ndt = 0.1\n[born]\n";
        let v = issues(text);
        let lines: Vec<_> = v.iter().map(|i| i.line).collect();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(lines.contains(&Some(7)) && lines.contains(&Some(6)) && lines.contains(&Some(2)));
    }

    #[test]
    fn dimension_and_stability_prechecks() {
        let v = issues("kind = \"evolve\"\n[grid]\ncells = [64, 64]\nlength = [10.0]\n");
        assert_eq!(v[0].line, Some(4));
        let v = issues("kind = \"dispersion\"\n[solver]\ndt = 1.0\n");
        assert_eq!(v[0].line, Some(3));
        assert!(v[0].message.contains("not resolvable"), "{}", v[0].message);
        let v = issues("kind = \"evolve\"\n[evolve]\nsigma = [1.0, 2.0]\n");
        assert_eq!(v[0].line, Some(3));
        let v = issues("kind = \"vortex\"\n[grid]\ncells = [64]\nlength = [10.0]\n[vortex]\n");
        assert!(v[0].message.contains("rank"));
        let v = issues("kind = \"evolve\"\n[solver]\nkappa = 0.5\n");
        assert!(v[0].message.contains("hydro"));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
kind = "born"
seed = 42
output = "out/born"

[params]
hbar = 2.0
m = 0.5
c = 3.0

[grid]
cells = [128]
length = [20.0]

[solver]
dt = 0.001

[born]
n_members = 1500
t_final = 0.5
range = [-4.0, 4.0]
potential = { type = "harmonic", omega = 2.0 }
guide_potential = { type = "none" }

[born.packet]
center = [0.5]
"#;
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
        let r = c.resolved();
        assert_eq!(parse_config(&r.to_toml().unwrap()).unwrap(), r);
        assert_eq!(r.resolved(), r);
    }

    #[test]
    fn every_kind_resolves_and_round_trips() {
        for kind in ScenarioKind::ALL {
            let c = ScenarioConfig::new(kind);
            c.validate().unwrap_or_else(|e| panic!("{kind}: {e}"));
            let r = c.resolved();
            r.validate().unwrap_or_else(|e| panic!("{kind} resolved: {e}"));
            let text = r.to_toml().unwrap();
            assert_eq!(parse_config(&text).unwrap(), r, "{kind}:\n{text}");
        }
    }

    #[test]
    fn vortex_list_parses() {
        let text = r#"
kind = "vortex"
[[vortex.vortices]]
center = [0.0, 0.0]
n = 1
[[vortex.vortices]]
center = [10.0, 5.0]
n = -2
profile = { model = "gaussian_dimple", depth = 0.5, width = 2.0 }
"#;
        let c = parse_config(text).unwrap();
        let v = &c.vortex.as_ref().unwrap().vortices;
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].n, -2);
        let bad = issues("kind = \"vortex\"\n[[vortex.vortices]]\ncenter = [0.0, 0.0]\nn = 0\n");
        assert!(bad[0].message.contains("winding 0"));
        assert_eq!(bad[0].line, Some(2));
    }
}
