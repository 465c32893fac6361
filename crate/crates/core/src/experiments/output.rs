//! CSV tables and run manifests.

use crate::error::{Result, SimError};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Rows of formatted cells under a header whose names carry units in brackets.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width does not match the header"
        );
        self.rows.push(row);
    }

    /// Column index by exact header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric column.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| SimError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| SimError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        let text = self.to_csv()?;
        std::fs::write(path, &text)?;
        Ok(sha256_hex(text.as_bytes()))
    }
}

/// Shortest round-trip formatting, so reruns produce identical bytes;
/// exponent notation outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in d.iter() {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run; `wall_time_s` is the only field
/// expected to differ between reruns.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_s: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
    pub passed: Option<bool>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            args,
            config_digest: None,
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            tolerances: BTreeMap::new(),
            outputs: Vec::new(),
            passed: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| SimError::Io(std::io::Error::other(e)))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_digest() {
        let mut t = Table::new(&["t[1/E]", "label"]);
        t.push(vec![num(0.1), "a,b".into()]);
        t.push(vec![num(2.0), "c".into()]);
        let text = t.to_csv().unwrap();
        assert_eq!(text, "t[1/E],label\n0.1,\"a,b\"\n2,c\n");
        assert_eq!(t.numbers("t[1/E]").unwrap(), vec![0.1, 2.0]);
        assert_eq!(num(3.5e-10), "3.5e-10");
        assert_eq!("3.5e-10".parse::<f64>().unwrap(), 3.5e-10);
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
