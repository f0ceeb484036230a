//! Deterministic CSV and JSON serialization.
//!
//! Numbers are rounded to 12 significant digits. CSV files open with
//! `# key = value` lines holding the resolved configuration (strip the
//! `# ` prefix to recover a runnable config file), then `## name = value`
//! result summaries, then the header row.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::Result;

pub const GENERATOR: &str = concat!("qgas-spin ", env!("CARGO_PKG_VERSION"));

/// `x` rounded to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest text for `x` at 12 significant digits; plain decimal for
/// moderate magnitudes, exponent form otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig12(x);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Number(x) => format_number(*x),
            Cell::Integer(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Number(x) if x.is_finite() => json!(round_sig12(*x)),
            Cell::Number(_) => Value::Null,
            Cell::Integer(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// A table with named columns, plus result summaries.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summarize(&mut self, name: &str, value: Cell) {
        self.summary.push((name.to_string(), value));
    }

    pub fn render(&self, config: &RunConfig, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(config),
            Format::Json => self.render_json(config),
        }
    }

    fn render_csv(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!("## generator: {GENERATOR}\n"));
        for (k, v) in config.entries() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("## {k} = {}\n", v.to_csv()));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self, config: &RunConfig) -> String {
        let cfg: Map<String, Value> =
            config.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::to_json).collect())).collect();
        let doc = json!({
            "generator": GENERATOR,
            "config": cfg,
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(1.12), "1.12");
        assert_eq!(format_number(-0.020528905213467), "-0.0205289052135");
        assert_eq!(format_number(27000.0), "27000");
        assert_eq!(format_number(1.234567890123456e-7), "1.23456789012e-7");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(f64::NAN), "NaN");
    }
}
