//! The CSV contract: one comment header line, one provenance line, a column
//! header, then rows. Floats carry 9 significant digits; counts are plain
//! integers. Output is byte-deterministic for a given dataset.

use std::path::Path;

use crate::CliError;

/// Format a float with 9 significant digits, `%g`-style: fixed notation in a
/// moderate exponent range with trailing zeros trimmed, scientific otherwise.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..9).contains(&exponent) {
        let decimals = (8 - exponent).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        let trimmed = if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.')
        } else {
            &fixed
        };
        trimmed.to_string()
    } else {
        let sci = format!("{x:.8e}");
        // Trim trailing zeros in the mantissa: "1.20000000e9" -> "1.2e9".
        match sci.split_once('e') {
            Some((mantissa, exp)) => {
                let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
                format!("{mantissa}e{exp}")
            }
            None => sci,
        }
    }
}

/// Round a float to its 9-significant-digit representation, so values that
/// are fitted and values that are written to disk agree exactly.
pub fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().unwrap_or(x)
}

/// One dataset bound for a CSV file.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub experiment: String,
    pub seed: u64,
    pub label: String,
    pub columns: Vec<&'static str>,
    /// Rows as already-formatted cells.
    pub rows: Vec<Vec<String>>,
}

impl CsvDataset {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# experiment={} seed={} version={}\n",
            self.experiment,
            self.seed,
            env!("CARGO_PKG_VERSION")
        ));
        out.push_str(&format!("# label={}\n", self.label));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
            }
        }
        std::fs::write(path, self.render()).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// A parsed CSV: header names plus numeric rows.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Pull `(x, y)` pairs from two named columns.
    pub fn xy(&self, x_col: &str, y_col: &str) -> Result<Vec<(f64, f64)>, CliError> {
        let xi = self.column_index(x_col).ok_or_else(|| CliError::Csv {
            line: 0,
            reason: format!("missing column `{x_col}`"),
        })?;
        let yi = self.column_index(y_col).ok_or_else(|| CliError::Csv {
            line: 0,
            reason: format!("missing column `{y_col}`"),
        })?;
        Ok(self.rows.iter().map(|r| (r[xi], r[yi])).collect())
    }
}

/// Parse CSV text: `#` comment lines are skipped, the first remaining line is
/// the column header. Errors report 1-based line numbers.
pub fn parse_csv(text: &str) -> Result<CsvTable, CliError> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match &columns {
            None => {
                columns = Some(line.split(',').map(|c| c.trim().to_string()).collect());
            }
            Some(cols) => {
                let cells: Vec<&str> = line.split(',').collect();
                if cells.len() != cols.len() {
                    return Err(CliError::Csv {
                        line: line_no,
                        reason: format!("expected {} fields, found {}", cols.len(), cells.len()),
                    });
                }
                let mut row = Vec::with_capacity(cells.len());
                for cell in cells {
                    let value: f64 = cell.trim().parse().map_err(|_| CliError::Csv {
                        line: line_no,
                        reason: format!("`{cell}` is not a number"),
                    })?;
                    row.push(value);
                }
                rows.push(row);
            }
        }
    }
    let columns = columns.ok_or(CliError::Csv {
        line: 0,
        reason: "file has no column header".into(),
    })?;
    if rows.is_empty() {
        return Err(CliError::Csv {
            line: 0,
            reason: "file has no data rows".into(),
        });
    }
    Ok(CsvTable { columns, rows })
}

pub fn read_csv(path: &Path) -> Result<CsvTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_csv(&text)
}
