use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::{hex, ExperimentConfig};
use crate::error::{Error, Result};
use crate::numeric::fmt_f64;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Float(v.unwrap_or(f64::NAN))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

/// A CSV file in memory: fixed header, rows in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: String,
    columns: usize,
    body: String,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.to_string(),
            columns: header.split(',').count(),
            body: String::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns, "row width does not match `{}`", self.header);
        for (i, c) in row.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.body, "{v}").unwrap(),
                Cell::Float(v) => self.body.push_str(&fmt_f64(*v)),
                Cell::Text(s) => self.body.push_str(s),
            }
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header, self.body)
    }
}

/// Files and scalar results of one experiment, before they touch the disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    /// Relative path -> contents.
    pub files: BTreeMap<String, String>,
    /// Scalars worth reading without parsing CSV; written as summary.json.
    pub summary: BTreeMap<String, Value>,
}

impl ExperimentOutput {
    pub fn add_table(&mut self, name: &str, table: &Table) {
        self.files.insert(name.to_string(), table.render());
    }

    pub fn add_file(&mut self, name: &str, contents: String) {
        self.files.insert(name.to_string(), contents);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Sets a float; non-finite values become null.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.summary.insert(
            key.to_string(),
            serde_json::Number::from_f64(value).map_or(Value::Null, Value::Number),
        );
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Parses a produced CSV back into columns by header name.
    pub fn column(&self, file: &str, name: &str) -> Option<Vec<f64>> {
        let text = self.files.get(file)?;
        let mut lines = text.lines();
        let idx = lines.next()?.split(',').position(|h| h == name)?;
        lines.map(|l| l.split(',').nth(idx).and_then(|v| v.parse().ok())).collect()
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Reproducibility record written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub config: Value,
    pub config_sha256: String,
    pub master_seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    /// Relative path -> SHA-256 of contents.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn staging_dir(output_dir: &Path) -> PathBuf {
    output_dir.join(format!(".staging-{}", std::process::id()))
}

/// Writes every file plus summary.json and manifest.json into
/// `config.output_dir`. Files are first written into a staging directory and
/// moved into place only when all writes succeed; on failure the staging
/// directory is removed.
pub fn emit_outputs(
    output: &ExperimentOutput,
    config: &ExperimentConfig,
    started_unix_ms: u128,
) -> Result<RunManifest> {
    let dir = &config.output_dir;
    let staging = staging_dir(dir);
    let result = write_staged(output, config, started_unix_ms, &staging);
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

fn write_staged(
    output: &ExperimentOutput,
    config: &ExperimentConfig,
    started_unix_ms: u128,
    staging: &Path,
) -> Result<RunManifest> {
    let mut files = output.files.clone();
    let mut summary = serde_json::to_string_pretty(&output.summary)?;
    summary.push('\n');
    files.insert(SUMMARY_FILE.to_string(), summary);

    if staging.exists() {
        fs::remove_dir_all(staging)?;
    }
    fs::create_dir_all(staging)?;
    let mut checksums = BTreeMap::new();
    for (name, contents) in &files {
        check_relative(name)?;
        let path = staging.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        checksums.insert(name.clone(), sha256_hex(contents.as_bytes()));
    }
    let manifest = RunManifest {
        experiment: config.experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.document.clone(),
        config_sha256: config.hash(),
        master_seed: config.master_seed,
        started_unix_ms,
        finished_unix_ms: now_ms(),
        files: checksums,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(staging.join(MANIFEST_FILE), text)?;

    let dir = &config.output_dir;
    for name in files.keys().map(String::as_str).chain([MANIFEST_FILE]) {
        let to = dir.join(name);
        if let Some(parent) = to.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::rename(staging.join(name), &to)?;
    }
    fs::remove_dir_all(staging)?;
    Ok(manifest)
}

fn check_relative(name: &str) -> Result<()> {
    let p = Path::new(name);
    if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
        return Err(Error::validation("output", format!("file name {name} escapes the output directory")));
    }
    Ok(())
}
