//! CSV data ingestion. Files are UTF-8, comma-separated, with an optional
//! header row; malformed rows are reported with their 1-based line number.

use std::path::Path;

use crate::CliError;

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_field(path: &Path, line_no: usize, field: &str) -> Result<f64, CliError> {
    let v: f64 = field.trim().parse().map_err(|_| {
        CliError::Runtime(format!(
            "{} line {line_no}: not a number: {:?}",
            path.display(),
            field.trim()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Runtime(format!(
            "{} line {line_no}: value must be finite, got {v}",
            path.display()
        )));
    }
    Ok(v)
}

/// One numeric column. Blank lines are skipped.
pub fn load_column(path: &Path, skip_header: bool) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let line_no = i + 1;
        if (skip_header && i == 0) || line.trim().is_empty() {
            continue;
        }
        out.push(parse_field(path, line_no, line)?);
    }
    if out.is_empty() {
        return Err(CliError::Runtime(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Two numeric columns x,y. Blank lines are skipped.
pub fn load_pairs(path: &Path, skip_header: bool) -> Result<Vec<[f64; 2]>, CliError> {
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let line_no = i + 1;
        if (skip_header && i == 0) || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(CliError::Runtime(format!(
                "{} line {line_no}: expected two comma-separated columns, got {}",
                path.display(),
                fields.len()
            )));
        }
        out.push([
            parse_field(path, line_no, fields[0])?,
            parse_field(path, line_no, fields[1])?,
        ]);
    }
    if out.is_empty() {
        return Err(CliError::Runtime(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}
