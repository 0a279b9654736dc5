use std::io::Write;

use serde::Serialize;

use crate::error::{arg, Result};

/// Labeled table of parameter/result rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub label: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepResult {
    pub fn new(label: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            label: label.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return arg(format!(
                "row has {} values, table '{}' has {} columns",
                row.len(),
                self.label,
                self.columns.len()
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn append(&mut self, other: SweepResult) -> Result<()> {
        if other.columns != self.columns {
            return arg("column mismatch");
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Writes a `#`-prefixed metadata line, the header, then one line per row.
    /// Floats use the shortest round-trip representation, so equal tables
    /// serialize to identical bytes.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &str) -> std::io::Result<()> {
        writeln!(out, "# {}", metadata.replace('\n', " "))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut s = SweepResult::new("t", &["a", "b"]);
        s.push(vec![1.0, 0.25]).unwrap();
        s.push(vec![2.0, 1e-12]).unwrap();
        assert!(s.push(vec![1.0]).is_err());
        let mut buf = Vec::new();
        s.write_csv(&mut buf, "seed=7").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# seed=7\na,b\n1,0.25\n2,0.000000000001\n");
        assert_eq!(s.column("b").unwrap(), vec![0.25, 1e-12]);
    }
}
