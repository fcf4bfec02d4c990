use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::constants::CONSTANTS_VERSION;
use crate::error::{Error, Result};

/// Crate version stamped into every output file.
pub const TOOL_VERSION: &str = concat!("pmgauss ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!(
                "unknown format `{s}` (expected csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:e}"),
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Text(t) => s.serialize_str(t),
            _ => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub constants_version: String,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(config_sha256: String) -> Self {
        Self {
            config_sha256,
            constants_version: CONSTANTS_VERSION.to_string(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

/// Rows of scalar results under a `name:unit` schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
    /// Free-form `key: value` findings, written as `#` lines.
    pub summary: Vec<String>,
}

impl ResultTable {
    pub fn new(name: &str, schema: &[(&str, &str)], provenance: Provenance) -> Self {
        Self {
            name: name.to_string(),
            columns: schema
                .iter()
                .map(|&(n, u)| Column {
                    name: n.to_string(),
                    unit: u.to_string(),
                })
                .collect(),
            rows: Vec::new(),
            provenance,
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the schema"
        );
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric view of a column; non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[i].as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn text_column(&self, name: &str) -> Option<Vec<String>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Text(s) => s.clone(),
                    other => other.csv(),
                })
                .collect(),
        )
    }

    /// Rows whose `error` column is non-empty.
    pub fn failed_rows(&self) -> usize {
        self.text_column("error")
            .map(|v| v.iter().filter(|s| !s.is_empty()).count())
            .unwrap_or(0)
    }

    pub fn header_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# table: {}", self.name);
        let _ = writeln!(s, "# tool_version: {}", self.provenance.tool_version);
        let _ = writeln!(
            s,
            "# constants_version: {}",
            self.provenance.constants_version
        );
        let _ = writeln!(s, "# config_sha256: {}", self.provenance.config_sha256);
        for line in &self.summary {
            let _ = writeln!(s, "# {line}");
        }
        s
    }

    /// Column row and data rows, without the `#` header.
    pub fn body_csv(&self) -> String {
        let mut s = String::new();
        let names: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}:{}", c.name, c.unit))
            .collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        self.header_csv() + &self.body_csv()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => Ok(self.to_csv()),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Write `<dir>/<name>.<ext>`, creating `dir` if needed.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        std::fs::write(&path, self.render(format)?)?;
        Ok(path)
    }
}

impl Serialize for ResultTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(5))?;
        map.serialize_entry("table", &self.name)?;
        map.serialize_entry("provenance", &self.provenance)?;
        map.serialize_entry("summary", &self.summary)?;
        map.serialize_entry("columns", &self.columns)?;
        map.serialize_entry("rows", &self.rows)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        let mut t = ResultTable::new(
            "demo",
            &[("t", "s"), ("note", "-")],
            Provenance::new("abc".into()),
        );
        t.push(vec![Cell::Num(4e-5), Cell::Text("a, \"b\"".into())]);
        t.push(vec![Cell::Missing, Cell::Text(String::new())]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = table().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# table: demo");
        assert!(lines[3].ends_with("abc"));
        assert_eq!(lines[4], "t:s,note:-");
        assert_eq!(lines[5], "4e-5,\"a, \"\"b\"\"\"");
        assert_eq!(lines[6], ",");
    }

    #[test]
    fn json_nulls_missing_cells() {
        let v: serde_json::Value = serde_json::from_str(&table().to_json().unwrap()).unwrap();
        assert_eq!(v["rows"][1][0], serde_json::Value::Null);
        assert_eq!(v["columns"][0]["unit"], "s");
    }

    #[test]
    fn numeric_columns() {
        let t = table();
        assert_eq!(t.column("t").unwrap()[0], 4e-5);
        assert!(t.column("t").unwrap()[1].is_nan());
        assert!(t.column("missing").is_none());
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
