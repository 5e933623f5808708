//! Atomic file output and CSV formatting.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Path of the JSON report written next to a CSV file.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".report.json");
    csv.with_file_name(name)
}

/// Shortest decimal string that parses back to exactly `x`; exponent
/// notation outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Accumulates `#` metadata lines, a header row and data rows.
///
/// Numbers use Rust's shortest round-trip formatting, so parsing a cell
/// returns the exact `f64` that was written.
#[derive(Debug, Default)]
pub struct CsvBuilder {
    text: String,
}

impl CsvBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, line: impl AsRef<str>) {
        for l in line.as_ref().lines() {
            self.text.push_str("# ");
            self.text.push_str(l);
            self.text.push('\n');
        }
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.text.push_str(&columns.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Parses the data rows of a CSV written by [`CsvBuilder`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or("missing header row")?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
        let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
        if row.len() != columns.len() {
            return Err(format!("row {}: expected {} cells, found {}", i + 1, columns.len(), row.len()));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}
