//! Result tables and their CSV/JSON encodings.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&String> for Cell {
    fn from(s: &String) -> Self {
        Cell::Text(s.clone())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

/// Shortest round-trip representation, in exponent form outside [1e-4, 1e6).
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() && (1e-4..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub version: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        let digest = Sha256::digest(canonical_config.as_bytes());
        Self {
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultTable {
    pub command: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(command: &str, columns: &[(&str, &str)], provenance: Provenance) -> Self {
        Self {
            command: command.into(),
            metadata: Vec::new(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: (*n).into(),
                    unit: (*u).into(),
                })
                .collect(),
            rows: Vec::new(),
            provenance,
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.metadata.push((key.into(), value.into().render()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    /// `#`-prefixed metadata and units, a header row, the data, then the
    /// provenance footer.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("# command: {}\n", self.command));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let units: Vec<&str> = self.columns.iter().map(|c| c.unit.as_str()).collect();
        out.push_str(&format!("# units: {}\n", units.join(",")));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(std::io::Error::from)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(std::io::Error::from)?;
        }
        let body = w.into_inner().map_err(|e| e.into_error())?;
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        out.push_str(&format!("# config_sha256: {}\n", self.provenance.config_sha256));
        out.push_str(&format!("# version: {}\n", self.provenance.version));
        out.push_str(&format!("# seed: {}\n", self.provenance.seed));
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new("demo", &[("x_ps", "ps"), ("ok", "")], Provenance::new("{}", 7));
        t.meta("note", "two rows");
        t.push(vec![1.5e-13.into(), true.into()]);
        t.push(vec![0.25.into(), false.into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "# command: demo");
        assert_eq!(lines[1], "# note: two rows");
        assert_eq!(lines[2], "# units: ps,");
        assert_eq!(lines[3], "x_ps,ok");
        assert_eq!(lines[4], "1.5e-13,true");
        assert_eq!(lines[5], "0.25,false");
        assert!(lines[6].starts_with("# config_sha256: 44136fa3"));
        assert_eq!(lines[8], "# seed: 7");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.954043, 1e-11, 2.5e13, -3.0e-5, 123456.0] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_has_provenance() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["provenance"]["seed"], 7);
        assert_eq!(v["rows"][0][1], true);
    }
}
