// SPDX-License-Identifier: Apache-2.0

//! CSV tables with a `#`-prefixed provenance block.

use std::io::Write;
use std::path::Path;

pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("SL2RMP_GIT_DESCRIBE"))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    /// `key: value` lines of the header block.
    pub provenance: Vec<(String, String)>,
    pub config_echo: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(command: impl Into<String>, seed: u64, config_echo: String, columns: Vec<&'static str>) -> Self {
        Self {
            provenance: vec![
                ("sl2rmp".into(), version()),
                ("command".into(), command.into()),
                ("seed".into(), seed.to_string()),
            ],
            config_echo,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.provenance.push((key.into(), value.to_string()));
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.provenance {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "# config:")?;
        for line in self.config_echo.lines() {
            writeln!(w, "#   {line}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()
    }

    /// Writes to `path`, or to stdout when absent.
    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        match path {
            Some(p) => self.write_to(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => self.write_to(std::io::stdout().lock()),
        }
    }
}

/// Shortest round-trip form, in scientific notation away from `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub const OK: &str = "ok";

pub fn flagged(err: impl std::fmt::Display) -> String {
    format!("error: {err}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rfc4180_body() {
        let mut t = Table::new("test", 3, "a = 1\n".into(), vec!["x", "status"]);
        t.rows.push(vec![num(0.5), flagged("bad, \"quoted\"")]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# sl2rmp: "));
        assert_eq!(lines[4], "#   a = 1");
        assert_eq!(lines[5], "x,status");
        assert_eq!(lines[6], "0.5,\"error: bad, \"\"quoted\"\"\"");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -2.5, 5.56e-6, 1e300, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(5.56e-6), "5.56e-6");
    }
}
