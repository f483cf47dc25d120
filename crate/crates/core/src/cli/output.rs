use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Rectangular numeric table with `#` metadata. Empty cells are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(Some).collect());
    }

    pub fn push_opt(&mut self, row: impl IntoIterator<Item = Option<f64>>) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} cells, table has {} columns",
                    row.len(),
                    self.columns.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(v) = cell {
                    if !v.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "non-finite value {v} at row {i}, column `{}`",
                            self.columns[j]
                        )));
                    }
                }
            }
        }
        for (k, v) in &self.metadata {
            if k.contains(['\n', ':']) || v.contains('\n') {
                return Err(Error::InvalidInput(format!("metadata entry `{k}` must be a single line")));
            }
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv_string(table: &ResultTable) -> Result<String> {
    table.validate()?;
    let mut out = String::new();
    for (k, v) in &table.metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(format_value).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let text = to_csv_string(table)?;
    std::fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn parse_csv(text: &str) -> Result<ResultTable> {
    let mut metadata = Vec::new();
    let mut lines = text.lines();
    let header = loop {
        match lines.next() {
            Some(l) if l.starts_with('#') => {
                let body = l.trim_start_matches('#').trim_start();
                let (k, v) = body
                    .split_once(": ")
                    .ok_or_else(|| Error::InvalidInput(format!("malformed metadata line `{l}`")))?;
                metadata.push((k.to_string(), v.to_string()));
            }
            Some(l) => break l,
            None => return Err(Error::InvalidInput("CSV has no header row".into())),
        }
    };
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row = l
            .split(',')
            .enumerate()
            .map(|(j, s)| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::InvalidInput(format!("row {i}, column {j}: {e}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let table = ResultTable { columns, rows, metadata };
    table.validate()?;
    Ok(table)
}
