//! Tab-separated report files: `#`-prefixed metadata preamble, one header
//! row, then data rows. Formatting is fixed-width-free and deterministic so
//! identical runs produce byte-identical files.

use std::path::Path;

use anyhow::{Context, Result};

pub struct Report {
    meta: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(columns: Vec<String>) -> Self {
        Report { meta: Vec::new(), columns, rows: Vec::new() }
    }

    pub fn meta(&mut self, line: impl Into<String>) {
        self.meta.push(line.into());
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            out.push_str("# ");
            out.push_str(m);
            out.push('\n');
        }
        out.push_str(&self.columns.join("\t"));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, out: Option<&Path>) -> Result<()> {
        let text = self.render();
        match out {
            Some(path) => std::fs::write(path, text)
                .with_context(|| format!("writing report to '{}'", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Scientific notation with enough digits to round-trip the comparisons the
/// reports are used for.
pub fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

/// Ratio columns are plain decimals so the self-consistency bound (1e-9
/// relative) survives the round trip through text.
pub fn ratio(v: f64) -> String {
    format!("{v:.9}")
}

pub fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_preamble_header_and_rows() {
        let mut r = Report::new(cols(&["a", "b"]));
        r.meta("tool v0");
        r.row(vec!["1".into(), sci(0.5)]);
        let text = r.render();
        assert_eq!(text, "# tool v0\na\tb\n1\t5.000000000e-1\n");
    }

    #[test]
    fn ratio_format_survives_reparse_to_1e9() {
        for &v in &[1.0, 0.123456789123, 17.25, 3.0e-4] {
            let back: f64 = ratio(v).parse().unwrap();
            assert!((back - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }
}
