//! Tabular results with an embedded run manifest.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Format};

pub const MANIFEST_PREFIX: &str = "# manifest: ";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) | Cell::Missing => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

pub struct Table {
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
    /// Derived scalars reported alongside the rows.
    pub summary: Map<String, Value>,
}

impl Table {
    pub fn new(columns: Vec<(String, String)>) -> Self {
        Self { columns, rows: Vec::new(), summary: Map::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything needed to reproduce the output: command, seed, resolved config.
pub fn manifest(command: &str, seed: u64, config: &ExperimentConfig, table: &Table) -> Value {
    let mut m = Map::new();
    m.insert("tool".into(), json!("kuramoto"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("seed".into(), json!(seed));
    m.insert("parallel".into(), json!(kuramoto_core::par::is_parallel()));
    m.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    if !table.summary.is_empty() {
        m.insert("summary".into(), Value::Object(table.summary.clone()));
    }
    Value::Object(m)
}

pub fn write(out: &mut dyn Write, format: Format, manifest: &Value, table: &Table) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{MANIFEST_PREFIX}{manifest}")?;
            let doc: Vec<String> = table.columns.iter().map(|(n, d)| format!("{n} = {d}")).collect();
            writeln!(out, "# columns: {}", doc.join("; "))?;
            let names: Vec<&str> = table.columns.iter().map(|(n, _)| n.as_str()).collect();
            writeln!(out, "{}", names.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let columns: Vec<Value> =
                table.columns.iter().map(|(n, d)| json!({ "name": n, "description": d })).collect();
            let rows: Vec<Value> = table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
            let doc = json!({ "manifest": manifest, "columns": columns, "rows": rows });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        assert_eq!(Cell::Num(0.1).csv(), "0.1");
        assert_eq!(Cell::Num(f64::NAN).csv(), "NaN");
        assert_eq!(Cell::Missing.csv(), "");
        assert_eq!(Cell::Text("a,b".into()).csv(), "\"a,b\"");
    }

    #[test]
    fn json_cells() {
        assert_eq!(Cell::Num(f64::INFINITY).json(), Value::Null);
        assert_eq!(Cell::Int(3).json(), json!(3));
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec![("a".into(), "first".into()), ("b".into(), "second".into())]);
        t.push(vec![1.5.into(), "x".into()]);
        let mut buf = Vec::new();
        write(&mut buf, Format::Csv, &json!({"seed": 1}), &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["# manifest: {\"seed\":1}", "# columns: a = first; b = second", "a,b", "1.5,x"]);
    }
}
