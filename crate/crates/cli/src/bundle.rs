//! CSV tables and the JSON manifest of one experiment run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha1::{Digest, Sha1};
use wpmfg_core::Field2D;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// One CSV file: header row plus numeric records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Long format `(t, e, value)` of a grid field.
    pub fn from_field(name: impl Into<String>, field: &Field2D) -> Self {
        let grid = field.grid();
        let mut table = Self::new(name, &["t", "e", "value"]);
        for x in 0..grid.time_points() {
            for y in 0..grid.energy_points() {
                table.push(vec![grid.time(x), grid.energy(y), field.get(x, y)]);
            }
        }
        table
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// RFC 4180 text with 17 significant digits per value.
    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.flush()?;
        Ok(w.into_inner().expect("flushed in-memory writer"))
    }
}

fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// SHA-1 over `blob <len>\0<content>`, as git hashes file contents.
pub fn git_blob_hash(content: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha1: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub converged: Option<bool>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
}

/// Emitted run: where it went and what was written.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl ResultBundle {
    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.manifest.files.iter().find(|f| f.name == name)
    }
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every table and a manifest listing their hashes.
pub fn emit_bundle(
    tables: &[Table],
    out_dir: &Path,
    config: &ExperimentConfig,
    command: &str,
    converged: Option<bool>,
    started_unix_ms: u128,
) -> Result<ResultBundle, CliError> {
    fs::create_dir_all(out_dir).map_err(io_error(out_dir))?;
    let mut files = Vec::with_capacity(tables.len());
    for table in tables {
        let path = out_dir.join(&table.name);
        let bytes = table.to_csv().map_err(|source| CliError::Csv {
            path: path.clone(),
            source,
        })?;
        fs::write(&path, &bytes).map_err(io_error(&path))?;
        files.push(FileEntry {
            name: table.name.clone(),
            sha1: git_blob_hash(&bytes),
            bytes: bytes.len(),
        });
    }
    let manifest = Manifest {
        tool: "wpmfg",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        converged,
        started_unix_ms,
        finished_unix_ms: unix_ms(),
        config: config.clone(),
        files,
    };
    let path = out_dir.join(MANIFEST);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest is plain data");
    fs::write(&path, json).map_err(io_error(&path))?;
    Ok(ResultBundle {
        dir: out_dir.to_path_buf(),
        manifest,
    })
}
