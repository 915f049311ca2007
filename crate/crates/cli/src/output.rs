//! CSV and JSON rendering of command results.

use serde_json::{json, Value};

use crate::args::Format;

/// Bump when the JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(i128),
    Float(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            // 17 significant digits round-trip every double
            Self::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Self::Float(x) if x.is_nan() => "nan".into(),
            Self::Float(x) if *x > 0.0 => "inf".into(),
            Self::Float(_) => "-inf".into(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Self::Int(b as i128)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(i: $t) -> Self {
                Self::Int(i as i128)
            }
        }
    )*};
}
int_cell!(u32, u64, i64, usize);

/// Everything one command produces.
pub struct Report {
    /// Serialized library result.
    pub result: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// `key value` lines emitted as CSV comments.
    pub notes: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(result: Value, columns: &[&str]) -> Self {
        Self {
            result,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.rows.push(cells);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }
}

pub fn render(report: &Report, command: &str, config: &Value, format: Format) -> String {
    match format {
        Format::Json => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "config": config,
                "result": report.result,
                "warnings": report.warnings,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            s.push_str(&format!("# schema_version {SCHEMA_VERSION}\n"));
            s.push_str(&format!("# command {command}\n"));
            s.push_str(&format!("# config {config}\n"));
            for (k, v) in &report.notes {
                s.push_str(&format!("# {k} {v}\n"));
            }
            for w in &report.warnings {
                s.push_str(&format!("# warning {w}\n"));
            }
            s.push_str(&report.columns.join(","));
            s.push('\n');
            for row in &report.rows {
                let cells: Vec<String> = row.iter().map(Cell::render).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
    }
}
