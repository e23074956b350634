//! Artifact writers. CSV payload bytes are a pure function of the report
//! values: fixed column order, floats at nine significant digits, and a
//! header line carrying the tool version and config hash.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nine significant digits, byte-stable.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.8e}")
}

/// One tabular artifact: column names plus rows of preformatted cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# sclab v{TOOL_VERSION} config={config_hash}\n"));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config_hash: &str) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let map: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.clone(), serde_json::Value::String(v.clone())))
                    .collect();
                serde_json::Value::Object(map)
            })
            .collect();
        serde_json::json!({
            "tool": format!("sclab v{TOOL_VERSION}"),
            "configHash": config_hash,
            "table": self.name,
            "rows": rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Writes a table in the chosen format; returns the written path.
pub fn write_table(
    dir: &Path,
    table: &Table,
    format: OutputFormat,
    config_hash: &str,
) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let (path, bytes) = match format {
        OutputFormat::Csv => {
            (dir.join(format!("{}.csv", table.name)), table.to_csv(config_hash).into_bytes())
        }
        OutputFormat::Json => (
            dir.join(format!("{}.json", table.name)),
            serde_json::to_string_pretty(&table.to_json(config_hash))
                .expect("table serialization")
                .into_bytes(),
        ),
    };
    let mut f = fs::File::create(&path)?;
    f.write_all(&bytes)?;
    Ok(path)
}

/// Writes a JSON document; returns the written path.
pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.json"));
    let mut f = fs::File::create(&path)?;
    f.write_all(serde_json::to_string_pretty(value).expect("json serialization").as_bytes())?;
    f.write_all(b"\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_nine_significant_digits() {
        assert_eq!(fmt_float(0.531004406), "5.31004406e-1");
        assert_eq!(fmt_float(1.0), "1.00000000e0");
        assert_eq!(fmt_float(0.0), "0.00000000e0");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("region", &["problem", "r1"]);
        let csv = t.to_csv("deadbeef");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "problem,r1");
    }

    #[test]
    fn json_round_trips_rows() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push_row(vec!["1".into(), fmt_float(0.25)]);
        let v = t.to_json("h");
        assert_eq!(v["rows"][0]["b"], "2.50000000e-1");
    }
}
