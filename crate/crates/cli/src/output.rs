//! Result tables and summaries.
//!
//! CSV tables have a header row and write floats with 17 significant digits,
//! so they round-trip exactly. JSON tables carry the same rows under a
//! versioned schema name. Summaries are flat JSON objects.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

use crate::config::Format;

/// Version of the table schemas; bumped when a column changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self, out: &mut String) {
        match self {
            Cell::Int(v) => write!(out, "{v}"),
            Cell::Float(v) => write!(out, "{v:.16e}"),
            Cell::Bool(v) => write!(out, "{v}"),
            Cell::Text(v) if v.contains([',', '"', '\n']) => write!(out, "\"{}\"", v.replace('"', "\"\"")),
            Cell::Text(v) => write!(out, "{v}"),
        }
        .expect("writing to a String cannot fail");
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.csv(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "schema": format!("stickygas/{}/v{}", self.name, SCHEMA_VERSION),
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("tables serialize");
        text.push('\n');
        text
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Scalar results of one run as key/value records, written with sorted keys.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    entries: Map<String, Value>,
}

impl Summary {
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn float(&mut self, key: impl Into<String>, value: f64) {
        let v = if value.is_finite() { json!(value) } else { json!(value.to_string()) };
        self.entries.insert(key.into(), v);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.entries).expect("summaries serialize");
        text.push('\n');
        text
    }
}

/// Where results go: files under a directory, or stdout and stderr.
pub struct Sink {
    dir: Option<PathBuf>,
    force: bool,
    format: Format,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, force: bool, format: Format) -> Self {
        Sink { dir, force, format }
    }

    fn paths(&self, dir: &Path, table: &Table) -> (PathBuf, PathBuf) {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        (dir.join(format!("{}.{ext}", table.name)), dir.join(format!("{}.summary.json", table.name)))
    }

    /// Fails before any computation if the outputs already exist.
    pub fn check_free(&self, name: &'static str) -> Result<()> {
        if let Some(dir) = &self.dir {
            let (a, b) = self.paths(dir, &Table::new(name, &[]));
            for path in [a, b] {
                if path.exists() && !self.force {
                    bail!("{} exists; pass --force to overwrite", path.display());
                }
            }
        }
        Ok(())
    }

    pub fn emit(&self, table: &Table, summary: &Summary) -> Result<()> {
        let body = table.render(self.format);
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
                self.check_free(table.name)?;
                let (table_path, summary_path) = self.paths(dir, table);
                for (path, text) in [(&table_path, &body), (&summary_path, &summary.to_json())] {
                    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
                }
            }
            None => {
                std::io::stdout().lock().write_all(body.as_bytes()).context("cannot write to stdout")?;
                std::io::stderr().lock().write_all(summary.to_json().as_bytes()).context("cannot write to stderr")?;
            }
        }
        Ok(())
    }
}
