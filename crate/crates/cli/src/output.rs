use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::config::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(i) => i as f64,
            Cell::Real(x) => x,
        }
    }

    fn to_json(self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Real(x) => json!(x),
        }
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

/// Fixed columns plus rows; CSV and JSON carry the same schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }
}

/// Provenance written ahead of every table.
#[derive(Debug, Clone)]
pub struct Header {
    pub version: String,
    pub config: Value,
    pub verdict: Value,
}

pub fn render(table: &Table, header: &Header, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(table, header),
        OutputFormat::Json => render_json(table, header),
    }
}

fn render_csv(table: &Table, header: &Header) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# version {}", header.version);
    let _ = writeln!(out, "# config {}", header.config);
    let _ = writeln!(out, "# verdict {}", header.verdict);
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Real(x) => format!("{x:?}"),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_json(table: &Table, header: &Header) -> String {
    let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(|c| c.to_json()).collect())).collect();
    let doc = json!({
        "version": header.version,
        "config": header.config,
        "verdict": header.verdict,
        "columns": table.columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
    s.push('\n');
    s
}
