//! Minimal CSV tables with unit comments and 12-significant-digit floats.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// `%.12g`-style formatting.
pub fn fmt_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Column {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub title: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(title: impl Into<String>, columns: Vec<Column>) -> Self {
        CsvTable {
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric column by name; text cells map to NaN.
    pub fn numeric(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(x) => *x,
                    Cell::Int(x) => *x as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn text(&self, name: &str) -> Option<Vec<String>> {
        let i = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Text(s) => s.clone(),
                    Cell::Num(x) => fmt_g12(*x),
                    Cell::Int(x) => x.to_string(),
                })
                .collect(),
        )
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "# {}", self.title);
        }
        let units: Vec<String> = self
            .columns
            .iter()
            .map(|c| {
                if c.unit.is_empty() {
                    c.name.clone()
                } else {
                    format!("{} [{}]", c.name, c.unit)
                }
            })
            .collect();
        let _ = writeln!(out, "# {}", units.join(", "));
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_g12(*x),
                    Cell::Int(x) => x.to_string(),
                    Cell::Text(s) if s.contains(',') || s.contains('"') => {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    }
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g12_examples() {
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.1), "0.1");
        assert_eq!(fmt_g12(-95.8), "-95.8");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(1.9683e-5), "1.9683e-5");
        assert_eq!(fmt_g12(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_g12(123456789012.0), "123456789012");
        assert_eq!(fmt_g12(0.0), "0");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(
            "demo",
            vec![Column::new("v_m_per_s", "m/s"), Column::new("series", "")],
        );
        t.push(vec![Cell::from(0.5), Cell::from("a,b")]);
        let s = t.to_csv_string();
        assert_eq!(
            s,
            "# demo\n# v_m_per_s [m/s], series\nv_m_per_s,series\n0.5,\"a,b\"\n"
        );
        assert_eq!(t.numeric("v_m_per_s").unwrap(), vec![0.5]);
    }

    proptest! {
        #[test]
        fn g12_keeps_twelve_digits(x in -1e30f64..1e30) {
            let back: f64 = fmt_g12(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }
}
