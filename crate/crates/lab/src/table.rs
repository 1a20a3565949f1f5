//! Column tables with fixed text formatting, written as RFC 4180 CSV.

use std::io::Write;
use std::path::Path;

use optomech::Result;

use crate::io_error;

/// One cell, formatted on output.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// Floats carry 17 significant digits, so the text is exact and stable.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
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

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float values of a column; empty and non-float cells become NaN.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[j] {
                    Cell::Float(x) => x,
                    Cell::Int(i) => i as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Option<Table> {
        let idx = names.iter().map(|n| self.column_index(n)).collect::<Option<Vec<_>>>()?;
        Some(Table {
            columns: names.iter().map(|s| s.to_string()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&j| r[j].clone()).collect()).collect(),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV text is UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| io_error(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(Cell::Float(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(-2.5).render(), "-2.5000000000000000e0");
        let x = -2.5e-12;
        assert_eq!(Cell::Float(x).render().parse::<f64>().unwrap(), x);
        assert_eq!(Cell::Empty.render(), "");
    }

    #[test]
    fn text_is_quoted() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.rows.push(vec![Cell::Text("x,y".into()), Cell::Int(3)]);
        assert_eq!(t.to_csv_string(), "a,b\n\"x,y\",3\n");
    }

    #[test]
    fn select_and_floats() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.rows.push(vec![Cell::Float(1.0), Cell::Empty]);
        let s = t.select(&["b", "a"]).unwrap();
        assert_eq!(s.columns, vec!["b", "a"]);
        assert!(s.floats("b").unwrap()[0].is_nan());
        assert_eq!(s.floats("a").unwrap(), vec![1.0]);
        assert!(t.select(&["c"]).is_none());
    }
}
