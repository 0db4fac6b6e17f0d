//! CSV tables and JSON artifacts.

use std::fs;
use std::path::Path;

use crate::error::CliError;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17, "{s}");
        }
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn writes_header_and_rows() {
        let dir = std::env::temp_dir().join(format!("quenched-table-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![1usize.into(), 0.5.into(), Cell::Empty]);
        let path = dir.join("t.csv");
        t.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b,c\n1,5.0000000000000000e-1,\n");
        fs::remove_dir_all(dir).unwrap();
    }
}
