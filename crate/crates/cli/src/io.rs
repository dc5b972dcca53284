//! Panel CSV reading and output file writing.

use std::fs;
use std::path::{Path, PathBuf};

use causal_compression::{Matrix, SamplePanel};

use crate::CliError;

/// Reads a panel CSV: header `x1..xn,y1..yn`, at least 3 numeric rows.
pub fn read_panel(path: &Path) -> Result<SamplePanel<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    let n = check_header(&header).map_err(|m| CliError::Validation(format!("{}: {m}", path.display())))?;

    let mut values = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Validation(format!("{}: row {}, column {}: {field:?} is not a number", path.display(), r + 1, header[c]))
            })?;
            if !v.is_finite() {
                return Err(CliError::Validation(format!(
                    "{}: row {}, column {}: non-finite value",
                    path.display(),
                    r + 1,
                    header[c]
                )));
            }
            values.push(v);
        }
    }
    let rows = values.len() / (2 * n);
    if rows < 3 {
        return Err(CliError::Validation(format!("{}: need at least 3 data rows, found {rows}", path.display())));
    }
    let m = Matrix::from_fn(rows, 2 * n, |i, j| values[i * 2 * n + j]);
    Ok(SamplePanel::new(n, m)?)
}

/// Series length implied by a header, or why it is unusable.
pub fn check_header(header: &[String]) -> Result<usize, String> {
    if header.is_empty() || !header.len().is_multiple_of(2) {
        return Err(format!("expected an even number of columns, found {}", header.len()));
    }
    let n = header.len() / 2;
    for (k, name) in header.iter().enumerate() {
        let expected = if k < n { format!("x{}", k + 1) } else { format!("y{}", k - n + 1) };
        if !name.eq_ignore_ascii_case(&expected) {
            return Err(format!("column {} is named {name:?}, expected {expected:?}", k + 1));
        }
    }
    Ok(n)
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

/// `result.json` + `out` → `result.out.path.csv`
pub fn sibling(path: &Path, label: &str, extension: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{label}.{extension}"))
}
