//! Run records and their JSON / CSV serialization.
//!
//! The payload (`params`, `convergence`, `results`) is a pure function of the
//! invocation; `meta` carries wall time and a SHA-256 of the payload.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::Format;
use crate::error::LabResult;

/// Flat table emitted as CSV: one tidy row per point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shorthand for building table rows from mixed values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::record::cell(&$v)),*] };
}

pub fn cell<T: std::fmt::Display>(v: &T) -> String {
    v.to_string()
}

/// Everything a subcommand produced, before serialization.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Value,
    pub convergence: Value,
    pub results: Value,
    pub table: Table,
    /// Set when the run found a property violation; the record is still written.
    pub violation: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub wall_time_ms: u128,
    pub payload_sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub meta: Meta,
    pub params: &'a Value,
    pub convergence: &'a Value,
    pub results: &'a Value,
}

pub fn payload_hash(o: &Outcome) -> LabResult<String> {
    let bytes = serde_json::to_vec(&(&o.params, &o.convergence, &o.results))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn render(
    o: &Outcome,
    command: &str,
    seed: Option<u64>,
    wall_time_ms: u128,
    format: Format,
) -> LabResult<Vec<u8>> {
    match format {
        Format::Json => {
            let rec = RunRecord {
                meta: Meta {
                    command: command.to_string(),
                    version: env!("CARGO_PKG_VERSION"),
                    seed,
                    wall_time_ms,
                    payload_sha256: payload_hash(o)?,
                },
                params: &o.params,
                convergence: &o.convergence,
                results: &o.results,
            };
            let mut out = serde_json::to_vec_pretty(&rec)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&o.table.header)?;
            for r in &o.table.rows {
                w.write_record(r)?;
            }
            w.into_inner().map_err(|e| crate::error::LabError::Serialize(e.to_string()))
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> LabResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn outcome() -> Outcome {
        let mut table = Table::new(&["a", "b"]);
        table.push(row![1, 0.5]);
        Outcome {
            params: json!({"t": 1.0}),
            convergence: json!({}),
            results: json!({"value": 2}),
            table,
            violation: None,
        }
    }

    #[test]
    fn hash_ignores_wall_time() {
        let o = outcome();
        let a: Value = serde_json::from_slice(&render(&o, "det", None, 1, Format::Json).unwrap()).unwrap();
        let b: Value = serde_json::from_slice(&render(&o, "det", None, 999, Format::Json).unwrap()).unwrap();
        assert_eq!(a["meta"]["payload_sha256"], b["meta"]["payload_sha256"]);
        assert_eq!(a["results"], b["results"]);
    }

    #[test]
    fn csv_has_header() {
        let bytes = render(&outcome(), "det", None, 0, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,0.5\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
