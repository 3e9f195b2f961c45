//! CSV tables: header row, LF line endings, floats in `{:.16e}`
//! (17 significant digits, round-trip exact).

use std::path::Path;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()).map_err(|source| CliError::Io { path: path.display().to_string(), source })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let mut t = Table::new(vec!["x".into(), "note".into(), "blank".into()]);
        let x = 0.1 + 0.2;
        t.push(vec![Cell::Num(x), Cell::Text("a".into()), Cell::Empty]);
        let text = String::from_utf8(t.to_csv()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,note,blank"));
        let row = lines.next().unwrap();
        assert!(!text.contains('\r'));
        let parsed: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert_eq!(parsed.to_bits(), x.to_bits());
        assert!(row.ends_with(",a,"));
    }
}
