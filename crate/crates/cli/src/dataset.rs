//! Tabular outputs with a provenance header, written as CSV and/or JSON.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const UNITS_NOTE: &str = "energies in meV, angles in radians, wavevectors in units of 1/lattice constant";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Flag(bool),
    /// Not computed for this row (unstable point, failed truncation, ...).
    Empty,
}

impl Cell {
    /// Non-finite values never reach the output.
    pub fn num(v: f64) -> Self {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Empty
        }
    }

    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::num)
    }

    fn csv(&self) -> String {
        match self {
            // Debug formatting is the shortest string that parses back to the same f64
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(b) => u8::from(*b).to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(i) => json!(i),
            Cell::Flag(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

pub fn col(name: &str, unit: &str) -> Column {
    Column { name: name.to_owned(), unit: unit.to_owned() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub schema: String,
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub units: String,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(schema: &str, config_hash: &str) -> Self {
        Self {
            schema: schema.to_owned(),
            config_hash: config_hash.to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            units: UNITS_NOTE.to_owned(),
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub provenance: Provenance,
    pub columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new(provenance: Provenance, columns: Vec<Column>) -> Self {
        Self { provenance, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the column count");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let p = &self.provenance;
        let mut out = String::new();
        out.push_str(&format!("# schema: {}\n", p.schema));
        out.push_str(&format!("# config_hash: {}\n", p.config_hash));
        out.push_str(&format!("# tool_version: {}\n", p.tool_version));
        out.push_str(&format!("# timestamp: {}\n", p.timestamp));
        out.push_str(&format!("# units: {}\n", p.units));
        for n in &p.notes {
            out.push_str(&format!("# note: {n}\n"));
        }
        let units: Vec<&str> = self.columns.iter().map(|c| c.unit.as_str()).collect();
        out.push_str(&format!("# column_units: {}\n", units.join(",")));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("ascii csv"));
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        json!({
            "provenance": self.provenance,
            "columns": self.columns,
            "rows": rows,
        })
    }

    /// Writes `<dir>/<stem>.csv` and/or `.json`, returning the paths written.
    pub fn write(&self, dir: &Path, stem: &str, formats: &[Format]) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in formats {
            let (path, body) = match f {
                Format::Csv => (dir.join(format!("{stem}.csv")), self.to_csv()),
                Format::Json => (
                    dir.join(format!("{stem}.json")),
                    serde_json::to_string_pretty(&self.to_json()).expect("json serialises") + "\n",
                ),
            };
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let mut d = Dataset::new(Provenance::new("test/v1", "abc"), vec![col("x", "meV"), col("ok", "flag")]);
        d.push(vec![Cell::num(0.1), Cell::Flag(true)]);
        d.push(vec![Cell::num(f64::NAN), Cell::Flag(false)]);
        d.push(vec![Cell::num(1e-300), Cell::Flag(true)]);
        d
    }

    #[test]
    fn csv_round_trips_and_blanks_non_finite() {
        let csv = sample().to_csv();
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["x,ok", "0.1,1", ",0", "1e-300,1"]);
        assert_eq!("0.1".parse::<f64>().unwrap(), 0.1);
        assert!(csv.contains("# config_hash: abc"));
        assert!(csv.contains("# column_units: meV,flag"));
    }

    #[test]
    fn json_mirrors_rows() {
        let j = sample().to_json();
        assert_eq!(j["rows"][0][0], json!(0.1));
        assert_eq!(j["rows"][1][0], Value::Null);
        assert_eq!(j["provenance"]["config_hash"], "abc");
    }

    #[test]
    #[should_panic]
    fn width_is_enforced() {
        sample().push(vec![Cell::Empty]);
    }
}
