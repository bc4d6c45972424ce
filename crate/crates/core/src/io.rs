//! TFLD field snapshots and the CSV time series.
//!
//! Snapshot layout (all little-endian): `"TFLD"`, `u32` version, `u64 nx`,
//! `u64 ny`, `f64 ν₁`, `f64 ν₂`, then `nx·ny` `f64` values with `x₁` fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geometry::TorusGeometry;
use crate::rearrange::IterationReport;
use crate::solver::Sample;

pub const MAGIC: &[u8; 4] = b"TFLD";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8;

pub fn encode_snapshot(field: &GridField) -> Vec<u8> {
    let g = field.geometry();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.cells());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    out.extend_from_slice(&g.nu1().to_le_bytes());
    out.extend_from_slice(&g.nu2().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<GridField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (nx, ny) = (u64_at(8), u64_at(16));
    let cells = nx
        .checked_mul(ny)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::Format(format!("grid {nx}x{ny} too large")))?;
    let expected = cells
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("grid {nx}x{ny} too large")))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for a {nx}x{ny} grid, found {}",
            bytes.len()
        )));
    }
    // Snapshots may come from toy grids, so only the lengths are validated.
    let geometry = TorusGeometry::debug_grid(f64_at(24), f64_at(32), nx as usize, ny as usize)?;
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridField::new(geometry, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_snapshot(path: &Path, field: &GridField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_snapshot(field))?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<GridField> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}

/// Full-precision formatting used by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn p_label(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}").replace('.', "_")
    }
}

/// Diagnostics CSV header for a set of samples.
pub fn diagnostics_header(sample: &Sample) -> Vec<String> {
    let mut h: Vec<String> = ["t", "E", "Z", "F1", "F2", "Zperp"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for o in &sample.orbit {
        h.push(format!("dist_p{}", p_label(o.p)));
    }
    for &(p, _) in &sample.ledger.lp_norms {
        h.push(format!("Lp{}", p_label(p)));
    }
    if let Some(o) = sample.orbit.first() {
        h.push(format!("alpha_p{}", p_label(o.p)));
        h.push(format!("beta_p{}", p_label(o.p)));
    }
    if sample.follower.is_some() {
        h.push("zeta_gap".into());
        h.push("zeta_drift".into());
    }
    h
}

pub fn diagnostics_row(sample: &Sample) -> Vec<String> {
    let l = &sample.ledger;
    let mut r = vec![l.time, l.energy, l.enstrophy, l.flux.f1, l.flux.f2, l.perp_enstrophy];
    r.extend(sample.orbit.iter().map(|o| o.distance));
    r.extend(l.lp_norms.iter().map(|&(_, v)| v));
    if let Some(o) = sample.orbit.first() {
        r.push(o.alpha);
        r.push(o.beta);
    }
    if let Some(f) = &sample.follower {
        r.push(f.gap);
        r.push(f.distribution_drift);
    }
    r.into_iter().map(fmt_f64).collect()
}

/// Incremental diagnostics CSV writer.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
    header_written: bool,
}

impl DiagnosticsWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self::new(File::create(path)?))
    }
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(w),
            header_written: false,
        }
    }

    pub fn push(&mut self, sample: &Sample) -> Result<()> {
        if !self.header_written {
            self.inner.write_record(diagnostics_header(sample))?;
            self.header_written = true;
        }
        self.inner.write_record(diagnostics_row(sample))?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_diagnostics(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = DiagnosticsWriter::create(path)?;
    for s in samples {
        w.push(s)?;
    }
    Ok(())
}

/// Iteration trace `iter,E,delta_E,orbit_dist` (`orbit_dist` empty when unknown).
pub fn write_trace<W: Write>(w: W, report: &IterationReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iter", "E", "delta_E", "orbit_dist"])?;
    for (k, e, d, dist) in report.trace_rows() {
        let dist = if dist.is_nan() { String::new() } else { fmt_f64(dist) };
        out.write_record([k.to_string(), fmt_f64(e), fmt_f64(d), dist])?;
    }
    out.flush()?;
    Ok(())
}

/// A CSV table read back as named `f64` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}
