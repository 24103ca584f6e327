//! CSV output: a commented header followed by a fixed column row and data.

use std::fmt::Write as _;
use std::io::{self, Write};

/// Crate version written into every header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A CSV table with `# ` comment lines before the column header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: String,
    pub rows: Vec<String>,
}

impl CsvTable {
    pub fn new(header: impl Into<String>) -> Self {
        Self {
            comments: Vec::new(),
            header: header.into(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: impl Into<String>) -> &mut Self {
        self.rows.push(row.into());
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header);
        for r in &self.rows {
            let _ = writeln!(out, "{r}");
        }
        out
    }

    /// Everything after the comment block.
    pub fn body(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header);
        for r in &self.rows {
            let _ = writeln!(out, "{r}");
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.render().as_bytes())
    }
}

/// Formats a float so that it parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_layout() {
        let mut t = CsvTable::new("a,b");
        t.comment("version 1").push("1,2");
        assert_eq!(t.render(), "# version 1\na,b\n1,2\n");
        assert_eq!(t.body(), "a,b\n1,2\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1e-300, 5.6, -0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
