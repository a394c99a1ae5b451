//! CSV and JSON result writers. Every file carries the format version:
//! CSV as a leading `# format_version=N` comment, JSON as a top-level
//! field.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::{AppError, FORMAT_VERSION};

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Parse a `--format` value.
    pub fn parse(name: &str) -> Result<Self, AppError> {
        match name {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(AppError::Config(format!(
                "unknown output format `{other}` (expected `csv` or `json`)"
            ))),
        }
    }
}

/// A rectangular numeric result: named columns over rows of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// New table with the given column names.
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    /// Append one row; its length must match the column count.
    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }
}

/// Write a table as CSV with the version comment and a header row.
pub fn write_csv(w: &mut dyn Write, table: &Table) -> Result<(), AppError> {
    writeln!(w, "# format_version={FORMAT_VERSION}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(&table.columns)
        .map_err(|e| AppError::Io(std::io::Error::other(e)))?;
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        csv.write_record(&fields)
            .map_err(|e| AppError::Io(std::io::Error::other(e)))?;
    }
    csv.flush()?;
    Ok(())
}

/// Write a table and any extra summary fields as one JSON document.
pub fn write_json(
    w: &mut dyn Write,
    command: &str,
    table: &Table,
    extra: Map<String, Value>,
) -> Result<(), AppError> {
    let mut doc = Map::new();
    doc.insert("format_version".into(), json!(FORMAT_VERSION));
    doc.insert("command".into(), json!(command));
    doc.insert("columns".into(), json!(table.columns));
    doc.insert("rows".into(), json!(table.rows));
    for (k, v) in extra {
        doc.insert(k, v);
    }
    serde_json::to_writer_pretty(&mut *w, &Value::Object(doc))
        .map_err(|e| AppError::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}

/// Read a two-column (or wider) CSV written by [`write_csv`] back into
/// memory, returning the header and rows. Comment lines are skipped.
pub fn read_csv(path: &std::path::Path) -> Result<(Vec<String>, Vec<Vec<f64>>), AppError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        let row: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| AppError::Config(format!("{}: bad number: {e}", path.display())))?);
    }
    Ok((header, rows))
}
