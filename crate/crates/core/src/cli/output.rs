//! Result files: JSON summaries, CSV tables with metadata sidecars, and plain
//! text field dumps.

use std::fs::{self, File};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cli::CliError;
use crate::error::Error;
use crate::grid::{GridSpec, RealField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
}

impl Metadata {
    pub fn now(config_hash: String) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Metadata { config_hash, timestamp, version: env!("CARGO_PKG_VERSION").to_string() }
    }
}

/// A table whose rows all have as many cells as the header.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl ExperimentRecord {
    pub fn new(header: &[&str]) -> Self {
        ExperimentRecord { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
        Ok(ExperimentRecord { header, rows })
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `sweep.csv` -> `sweep.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Writes the table and its metadata sidecar.
pub fn write_record(path: &Path, record: &ExperimentRecord, meta: &Metadata) -> Result<(), CliError> {
    record.write_csv(path)?;
    write_json(&meta_path(path), meta)
}

/// Line 1 holds `d`, line 2 the node counts, then `d * |N|` values one per
/// line, component by component with the last axis fastest.
pub fn write_field_dump<W: Write>(mut w: W, e: &RealField) -> Result<(), CliError> {
    let g = e.grid();
    writeln!(w, "{}", g.dim())?;
    let counts: Vec<String> = g.counts().iter().map(|n| n.to_string()).collect();
    writeln!(w, "{}", counts.join(" "))?;
    for v in e.data() {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a field dump; `half_widths` fix the cell geometry.
pub fn read_field_dump<R: BufRead>(r: R, half_widths: &[f64]) -> Result<RealField, CliError> {
    let bad = |line: usize, message: String| CliError::Solver(Error::VoxelFormat { line, message });
    let mut lines = r.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), CliError> {
        match lines.next() {
            Some((i, line)) => Ok((i + 1, line?)),
            None => Err(bad(0, format!("missing {what}"))),
        }
    };
    let (ln, d) = next("dimension")?;
    let d: usize = d.trim().parse().map_err(|e| bad(ln, format!("dimension: {e}")))?;
    let (ln, counts) = next("node counts")?;
    let counts = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(ln, format!("node counts: {e}")))?;
    let grid = GridSpec::new(d, &counts, half_widths)?;
    let mut data = Vec::with_capacity(grid.unknowns());
    for _ in 0..grid.unknowns() {
        let (ln, v) = next("field value")?;
        data.push(v.trim().parse::<f64>().map_err(|e| bad(ln, format!("value: {e}")))?);
    }
    Ok(RealField::from_vec(&grid, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_dump_round_trip() {
        let g = GridSpec::new(3, &[3, 2, 4], &[0.5, 1.0, 0.25]).unwrap();
        let e = RealField::from_fn(&g, |x| vec![x[0].sin(), 1.0 / 3.0 + x[1], -x[2] * 1e-300]);
        let mut buf = Vec::new();
        write_field_dump(&mut buf, &e).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("3"));
        assert_eq!(lines.next(), Some("3 2 4"));
        assert_eq!(lines.count(), 3 * 24);
        let back = read_field_dump(buf.as_slice(), &[0.5, 1.0, 0.25]).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let text = "2\n2 2\n1.0\n2.0\n";
        assert!(read_field_dump(text.as_bytes(), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn csv_round_trip_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = ExperimentRecord::new(&["a", "b"]);
        rec.push(vec!["1".into(), "x".into()]);
        rec.push(vec!["2".into(), "y".into()]);
        let path = dir.path().join("t.csv");
        let meta = Metadata::now("abc".into());
        write_record(&path, &rec, &meta).unwrap();
        assert_eq!(ExperimentRecord::read_csv(&path).unwrap(), rec);
        let sidecar: Metadata = serde_json::from_reader(File::open(dir.path().join("t.meta.json")).unwrap()).unwrap();
        assert_eq!(sidecar, meta);
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_panic() {
        let mut rec = ExperimentRecord::new(&["a", "b"]);
        rec.push(vec!["1".into()]);
    }
}
