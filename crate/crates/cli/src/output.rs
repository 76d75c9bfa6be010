//! Report emission: versioned JSON or RFC 4180 CSV, to stdout or a file.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

/// One command's results: a structured body for JSON plus a flat table for
/// CSV.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub body: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(command: &'static str, body: Value) -> Self {
        Report {
            command,
            body,
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn table(mut self, columns: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.columns = columns;
        self.rows = rows;
        self
    }

    fn to_json(&self) -> String {
        let mut top = json!({
            "schema": SCHEMA_VERSION,
            "command": self.command,
        });
        if let (Some(dst), Some(src)) = (top.as_object_mut(), self.body.as_object()) {
            for (k, v) in src {
                dst.insert(k.clone(), v.clone());
            }
        }
        let mut text = serde_json::to_string_pretty(&top).expect("serializable report");
        text.push('\n');
        text
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        let write_row = |out: &mut String, fields: &[String]| {
            for (i, field) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if field.contains([',', '"', '\n', '\r']) {
                    out.push('"');
                    out.push_str(&field.replace('"', "\"\""));
                    out.push('"');
                } else {
                    out.push_str(field);
                }
            }
            out.push_str("\r\n");
        };
        let header: Vec<String> = self.columns.iter().map(|c| c.to_string()).collect();
        write_row(&mut out, &header);
        for row in &self.rows {
            write_row(&mut out, row);
        }
        out
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> std::io::Result<()> {
        let text = match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        };
        match out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().write_all(text.as_bytes()),
        }
    }
}

/// Shortest round-trip decimal for table cells.
pub fn num(x: f64) -> String {
    format!("{x}")
}
