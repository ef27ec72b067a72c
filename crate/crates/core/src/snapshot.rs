//! Binary field container shared by every module, with JSON and CSV export.
//!
//! Layout (little-endian): 8-byte magic `EKVFIELD`, u32 version, u32 flags,
//! u32 rank, u32 extent per axis, f64 spacing per axis, u8 kind
//! (0 = real f64, 1 = complex f64 pairs re, im), then row-major samples.
//! The origin is not stored; decoded grids are centred on zero.

use num_complex::Complex64;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, ScalarField, MAX_RANK};

pub const MAGIC: &[u8; 8] = b"EKVFIELD";
pub const VERSION: u32 = 1;
/// Largest extent per axis accepted by the JSON export.
pub const JSON_MAX_EXTENT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Real(ScalarField),
    Complex(ComplexField),
}

impl From<ScalarField> for Snapshot {
    fn from(f: ScalarField) -> Self {
        Snapshot::Real(f)
    }
}

impl From<ComplexField> for Snapshot {
    fn from(f: ComplexField) -> Self {
        Snapshot::Complex(f)
    }
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

impl Snapshot {
    pub fn grid(&self) -> &Grid {
        match self {
            Snapshot::Real(f) => &f.grid,
            Snapshot::Complex(f) => &f.grid,
        }
    }

    pub fn kind(&self) -> u8 {
        match self {
            Snapshot::Real(_) => 0,
            Snapshot::Complex(_) => 1,
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let g = self.grid();
        let mut buf = Vec::with_capacity(64 + 16 * g.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        buf.extend_from_slice(&(g.rank() as u32).to_le_bytes());
        for &n in g.extents() {
            buf.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for &h in g.spacing() {
            buf.extend_from_slice(&h.to_le_bytes());
        }
        buf.push(self.kind());
        match self {
            Snapshot::Real(f) => f.values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
            Snapshot::Complex(f) => f.values.iter().for_each(|v| {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }),
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(fmt_err("bad magic"));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(fmt_err(format!("unsupported version {version}")));
        }
        let _flags = cur.u32()?;
        let rank = cur.u32()? as usize;
        if rank == 0 || rank > MAX_RANK {
            return Err(fmt_err(format!("rank {rank} out of range")));
        }
        let extents: Vec<usize> = (0..rank).map(|_| cur.u32().map(|n| n as usize)).collect::<Result<_>>()?;
        let spacing: Vec<f64> = (0..rank).map(|_| cur.f64()).collect::<Result<_>>()?;
        let grid = Grid::centered_from_spacing(&extents, &spacing).map_err(|e| fmt_err(e.to_string()))?;
        let kind = cur.take(1)?[0];
        let n = grid.len();
        let snap = match kind {
            0 => {
                cur.expect_remaining(8 * n)?;
                Snapshot::Real(ScalarField { grid, values: (0..n).map(|_| cur.f64()).collect::<Result<_>>()? })
            }
            1 => {
                cur.expect_remaining(16 * n)?;
                let values = (0..n).map(|_| Ok(Complex64::new(cur.f64()?, cur.f64()?))).collect::<Result<_>>()?;
                Snapshot::Complex(ComplexField { grid, values })
            }
            k => return Err(fmt_err(format!("unknown scalar kind {k}"))),
        };
        Ok(snap)
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Lossless JSON (shortest round-trip decimal for every sample).
    pub fn to_json(&self) -> Result<String> {
        let g = self.grid();
        if let Some(n) = g.extents().iter().find(|&&n| n > JSON_MAX_EXTENT) {
            return Err(fmt_err(format!("JSON export limited to {JSON_MAX_EXTENT} cells per axis, got {n}")));
        }
        let doc = JsonSnapshot {
            rank: g.rank(),
            extents: g.extents(),
            spacing: g.spacing(),
            kind: if self.kind() == 0 { "real64" } else { "complex128" },
            values: match self {
                Snapshot::Real(f) => JsonValues::Real(&f.values),
                Snapshot::Complex(f) => JsonValues::Complex(f.values.iter().map(|v| [v.re, v.im]).collect()),
            },
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// One row per sample: grid coordinates, then `value` or `re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = *self.grid();
        let axes = ["x", "y", "z"];
        let mut header: Vec<&str> = axes[..g.rank()].to_vec();
        header.extend_from_slice(if self.kind() == 0 { &["value"] } else { &["re", "im"] });
        writeln!(out, "{}", header.join(","))?;
        for i in 0..g.len() {
            let p = g.position(i);
            let coords: Vec<String> = p[..g.rank()].iter().map(|c| format!("{c:?}")).collect();
            let vals = match self {
                Snapshot::Real(f) => format!("{:?}", f.values[i]),
                Snapshot::Complex(f) => format!("{:?},{:?}", f.values[i].re, f.values[i].im),
            };
            writeln!(out, "{},{}", coords.join(","), vals)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct JsonSnapshot<'a> {
    rank: usize,
    extents: &'a [usize],
    spacing: &'a [f64],
    kind: &'static str,
    values: JsonValues<'a>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum JsonValues<'a> {
    Real(&'a [f64]),
    Complex(Vec<[f64; 2]>),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| fmt_err("truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn expect_remaining(&self, n: usize) -> Result<()> {
        let left = self.bytes.len() - self.pos;
        if left != n {
            return Err(fmt_err(format!("expected {n} sample bytes, found {left}")));
        }
        Ok(())
    }
}
