use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Column type tags written in the typed header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    F64,
    U64,
    Bool,
}

impl Col {
    fn tag(self) -> &'static str {
        match self {
            Col::F64 => "f64",
            Col::U64 => "u64",
            Col::Bool => "bool",
        }
    }
}

/// One cell; `None` is written as an empty field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    None,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::None, Cell::F)
    }
}

/// A columnar output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, Col)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, Col)]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|(n, c)| (n.to_string(), *c)).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, header: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {header}");
        let types: Vec<&str> = self.columns.iter().map(|(_, c)| c.tag()).collect();
        let _ = writeln!(s, "# types: {}", types.join(","));
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::F(v) => {
                        let _ = write!(s, "{v:e}");
                    }
                    Cell::U(v) => {
                        let _ = write!(s, "{v}");
                    }
                    Cell::B(v) => {
                        let _ = write!(s, "{v}");
                    }
                    Cell::None => {}
                }
            }
            s.push('\n');
        }
        s
    }
}

/// What a scenario produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Other text files; the header comment is inserted after their first line.
    pub files: Vec<(String, String)>,
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Structured summary written as `report.json`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub units: String,
    pub status: String,
    pub error: Option<String>,
    pub wall_time_seconds: f64,
    pub warnings: Vec<String>,
    pub summary: Map<String, Value>,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Header comment carried by every output file.
pub fn header(kind: &str, hash: &str, units: &str) -> String {
    format!("pilotwave {} kind={kind} config={hash} units={units}", env!("CARGO_PKG_VERSION"))
}

/// Writes tables and files into `dir`, returning their checksums.
pub fn write_outputs(dir: &Path, header: &str, outcome: &Outcome) -> std::io::Result<Vec<OutputEntry>> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    let mut emit = |name: String, text: String| -> std::io::Result<()> {
        let path: PathBuf = dir.join(&name);
        std::fs::write(&path, text.as_bytes())?;
        entries.push(OutputEntry { file: name, sha256: sha256_hex(text.as_bytes()), bytes: text.len() });
        Ok(())
    };
    for t in &outcome.tables {
        emit(format!("{}.csv", t.name), t.render(header))?;
    }
    for (name, body) in &outcome.files {
        let (first, rest) = body.split_once('\n').unwrap_or((body.as_str(), ""));
        emit(name.clone(), format!("{first}\n# source {header}\n{rest}"))?;
    }
    Ok(entries)
}

pub fn write_report(dir: &Path, report: &RunReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_renders_typed_header_and_round_trip_floats() {
        let mut t = Table::new("demo", &[("t", Col::F64), ("n", Col::U64), ("ok", Col::Bool), ("v", Col::F64)]);
        t.push(vec![0.1.into(), 3usize.into(), true.into(), Cell::None]);
        let s = t.render("h");
        assert_eq!(s, "# h\n# types: f64,u64,bool,f64\nt,n,ok,v\n1e-1,3,true,\n");
        let v: f64 = "1e-1".parse().unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
