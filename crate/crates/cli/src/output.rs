//! Tables, CSV/JSON writers and metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => v.to_string(),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => u8::from(*b).to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::U(v) => json!(v),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.into())
    }
}

/// A named table with unit-suffixed column names and free-form metadata.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Value,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            meta: Value::Object(Map::new()),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Input(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Input(format!("csv encoding: {e}")))
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().map(|c| c.to_string()).zip(r.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Writes data files and their sidecars into one directory.
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub written: Vec<PathBuf>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serializable");
    bytes.push(b'\n');
    bytes
}

impl Sink {
    pub fn new(dir: &Path, format: Format, command: &str, config_hash: &str, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            command: command.into(),
            config_hash: config_hash.into(),
            seed,
            written: Vec::new(),
        })
    }

    fn sidecar(&self, file: &str, columns: Option<&[&str]>, meta: &Value) -> Value {
        let mut v = json!({
            "command": self.command,
            "file": file,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "generator": concat!("twinphoton ", env!("CARGO_PKG_VERSION")),
        });
        if let Some(cols) = columns {
            v["columns"] = json!(cols);
        }
        v["meta"] = meta.clone();
        v
    }

    /// Data file in the selected format plus `<name>.meta.json`.
    pub fn table(&mut self, t: &Table) -> Result<(), CliError> {
        let file = format!("{}.{}", t.name, self.format.extension());
        let bytes = match self.format {
            Format::Csv => t.to_csv()?,
            Format::Json => json_bytes(&t.to_json()),
        };
        self.emit(&file, &bytes)?;
        let side = self.sidecar(&file, Some(&t.columns), &t.meta);
        self.emit(&format!("{}.meta.json", t.name), &json_bytes(&side))
    }

    /// JSON report plus sidecar, independent of the selected format.
    pub fn report(&mut self, name: &str, body: &impl Serialize) -> Result<(), CliError> {
        let file = format!("{name}.json");
        self.emit(&file, &json_bytes(body))?;
        let side = self.sidecar(&file, None, &Value::Null);
        self.emit(&format!("{name}.meta.json"), &json_bytes(&side))
    }

    fn emit(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(file);
        write_file(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub elapsed_ms: f64,
    pub warnings: Vec<String>,
}
