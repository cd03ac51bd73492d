//! Locale-independent CSV / JSON writers.

use serde::Serialize;

use crate::error::{Error, Result};

/// 17 significant digits, C-locale scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Builds a CSV document with a header row and `\n` line endings.
#[derive(Debug, Clone)]
pub struct CsvTable {
    buf: String,
    ncols: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        CsvTable { buf, ncols: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.ncols);
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn numeric_row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&cells);
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Pretty JSON with object keys sorted (serde_json's map is ordered by key).
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}
