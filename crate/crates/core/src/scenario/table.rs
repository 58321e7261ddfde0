//! Rectangular output tables with a units row and metadata.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// Locale-independent text: shortest round-trip form for floats.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => json!(self.render()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u8> for Cell {
    fn from(v: u8) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedTable {
    pub name: String,
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Ordered key/value pairs written ahead of the header.
    pub metadata: Vec<(String, String)>,
}

impl EmittedTable {
    pub fn new(name: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width does not match the {} columns of `{}`",
            self.columns.len(),
            self.name
        );
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; text cells map to `None`.
    pub fn numbers(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: self.name.clone(),
            message: e.to_string(),
        };
        writeln!(out, "# table = {}", self.name).map_err(io)?;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k} = {v}").map_err(io)?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let csv_err = |e: csv::Error| Error::Io {
            path: self.name.clone(),
            message: e.to_string(),
        };
        w.write_record(&self.columns).map_err(csv_err)?;
        w.write_record(&self.units).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let metadata: serde_json::Map<String, Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "table": self.name,
            "metadata": metadata,
            "columns": self
                .columns
                .iter()
                .zip(&self.units)
                .map(|(c, u)| json!({"name": c, "unit": u}))
                .collect::<Vec<_>>(),
            "rows": self
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Writes tables one after another; CSV blocks are separated by a blank
/// line, JSON output is a single array.
pub fn write_tables<W: Write>(tables: &[EmittedTable], format: OutputFormat, out: &mut W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: "output".into(),
        message: e.to_string(),
    };
    match format {
        OutputFormat::Csv => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(out).map_err(io)?;
                }
                t.write_csv(out)?;
            }
        }
        OutputFormat::Json => {
            let v = Value::Array(tables.iter().map(EmittedTable::to_json).collect());
            serde_json::to_writer_pretty(&mut *out, &v).map_err(|e| Error::Io {
                path: "output".into(),
                message: e.to_string(),
            })?;
            writeln!(out).map_err(io)?;
        }
    }
    Ok(())
}

pub fn render_tables(tables: &[EmittedTable], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_tables(tables, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("tables render as UTF-8"))
}
