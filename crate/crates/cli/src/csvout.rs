//! CSV output with a `#`-prefixed config header.
//!
//! Every run records its full resolved configuration (plus the RNG
//! algorithm name), so any output file can be reproduced from its own
//! header. Numeric cells use Rust's shortest round-trip float formatting,
//! which re-reads to the exact same f64.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

pub struct CsvDoc {
    header: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new(subcommand: &str, columns: Vec<&'static str>) -> Self {
        let mut doc = Self {
            header: Vec::new(),
            columns,
            rows: Vec::new(),
        };
        doc.meta("tool", format!("covsketch {subcommand}"));
        doc.meta("rng", covsketch::rng::RNG_ALGORITHM);
        doc
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.to_string(), value.to_string()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Writes to `path`, or stdout when no path is given.
    pub fn write(&self, path: Option<&Path>) -> io::Result<()> {
        let text = self.render();
        match path {
            Some(p) => fs::write(p, text),
            None => io::stdout().write_all(text.as_bytes()),
        }
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_columns_then_rows() {
        let mut doc = CsvDoc::new("demo", vec!["a", "b"]);
        doc.meta("n", 4);
        doc.row(vec!["1".into(), "2".into()]);
        let text = doc.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# tool=covsketch demo");
        assert_eq!(lines[1], "# rng=chacha20");
        assert_eq!(lines[2], "# n=4");
        assert_eq!(lines[3], "a,b");
        assert_eq!(lines[4], "1,2");
    }

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, 1e-300, f64::INFINITY, 29.89] {
            let s = fmt_f64(v);
            if v.is_finite() {
                assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
            } else {
                assert_eq!(s, "inf");
            }
        }
    }
}
