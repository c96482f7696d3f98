//! Minimal CSV output: a header row, then one row per record.
//!
//! Decimal big integers are always quoted so spreadsheet tools keep every
//! digit; text is quoted only when it needs to be.

use num_bigint::BigUint;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Big(BigUint),
    Float(f64),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<BigUint> for Cell {
    fn from(v: BigUint) -> Self {
        Cell::Big(v)
    }
}

fn field(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Big(v) => format!("\"{v}\""),
        Cell::Float(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n', '\r']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

pub fn emit_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.iter().map(field).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_header_only() {
        assert_eq!(emit_csv(&["n", "p"], &[]), "n,p\n");
    }

    #[test]
    fn quoting() {
        let rows = vec![vec![Cell::from(3usize), Cell::from(BigUint::from(10u32).pow(30)), Cell::from("a,b")]];
        assert_eq!(
            emit_csv(&["x", "big", "t"], &rows),
            "x,big,t\n3,\"1000000000000000000000000000000\",\"a,b\"\n"
        );
    }
}
