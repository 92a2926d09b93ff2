//! CSV and JSON emitters. Every artifact carries the tool version, the
//! SHA-256 of the resolved configuration and the configuration itself.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOOL: &str = "cholesteric-torque";

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub command: String,
    pub config_json: String,
    pub config_sha256: String,
}

impl Metadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let config_json = config.canonical_json();
        let digest = Sha256::digest(config_json.as_bytes());
        Self {
            command: command.to_owned(),
            config_sha256: format!("{digest:x}"),
            config_json,
        }
    }

    fn csv_header(&self) -> String {
        format!(
            "# {TOOL} {VERSION}\n# command: {}\n# config_sha256: {}\n# config: {}\n",
            self.command, self.config_sha256, self.config_json
        )
    }

    fn json_value(&self) -> Value {
        let config: Value =
            serde_json::from_str(&self.config_json).expect("canonical config is JSON");
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config_sha256": self.config_sha256,
            "config": config,
        })
    }
}

/// A rectangular result table with SI column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut out = meta.csv_header();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// JSON document `{metadata, <key>: payload}` with a trailing newline.
pub fn json_document(meta: &Metadata, key: &str, payload: Value) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("metadata".to_owned(), meta.json_value());
    doc.insert(key.to_owned(), payload);
    serde_json::to_string_pretty(&Value::Object(doc)).expect("document serializes") + "\n"
}

/// Renders a table in the requested format.
pub fn render(table: &Table, meta: &Metadata, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(meta),
        Format::Json => json_document(meta, "rows", table.to_json_value()),
    }
}
