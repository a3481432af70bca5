use std::io::Write;

use crate::error::CliError;

/// Metadata key excluded from reproducibility comparisons.
pub const TIMESTAMP_KEY: &str = "timestamp";

/// Numeric table written as CSV: `# key=value` metadata lines, a header row,
/// then rows with 17 significant digits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new<S: AsRef<str>>(headers: &[S]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), CliError> {
        if row.len() != self.headers.len() {
            return Err(CliError::RowWidth {
                got: row.len(),
                want: self.headers.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.metadata.push((key.into(), value));
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").map_err(csv::Error::from)?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ascii"))
    }
}

/// CSV text with the timestamp metadata line removed.
pub fn strip_timestamp(csv: &str) -> String {
    let prefix = format!("# {TIMESTAMP_KEY}=");
    csv.lines()
        .filter(|l| !l.starts_with(&prefix))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_precision() {
        let mut t = ResultTable::new(&["t", "u"]);
        t.meta("command", "decay");
        t.meta(TIMESTAMP_KEY, 17);
        t.push(vec![0.1, 1.0 / 3.0]).unwrap();
        t.push(vec![f64::NAN, -2.0]).unwrap();
        let s = t.to_csv_string().unwrap();
        assert!(!s.contains('\r'));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# command=decay");
        assert_eq!(lines[2], "t,u");
        assert_eq!(lines[3], "1.0000000000000001e-1,3.3333333333333331e-1");
        let back: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
        assert!(lines[4].starts_with("NaN,"));
        assert!(!strip_timestamp(&s).contains("timestamp"));
    }

    #[test]
    fn row_width_is_checked() {
        let mut t = ResultTable::new(&["a", "b"]);
        assert!(matches!(t.push(vec![1.0]), Err(CliError::RowWidth { got: 1, want: 2 })));
    }
}
