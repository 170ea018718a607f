//! CSV ingestion and writing.
//!
//! Files carry a header row; every data cell must parse as a finite
//! float. Errors name the 1-based data row and the column involved.
//! Floats are written in the shortest decimal form that parses back to
//! the same value, so repeated runs produce byte-identical files.

use std::path::Path;

use crate::errors::CliError;

/// A labeled table split into features and the target column.
pub struct LabeledData {
    pub features: Vec<f64>,
    pub n_cols: usize,
    pub feature_names: Vec<String>,
    pub targets: Vec<f64>,
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64, CliError> {
    let value: f64 = cell.trim().parse().map_err(|_| {
        CliError::Data(format!(
            "row {row}, column `{column}`: cannot parse `{cell}` as a number"
        ))
    })?;
    if !value.is_finite() {
        return Err(CliError::Data(format!(
            "row {row}, column `{column}`: value {value} is not finite"
        )));
    }
    Ok(value)
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(CliError::Data(format!(
            "{}: empty header row",
            path.display()
        )));
    }
    for (j, name) in headers.iter().enumerate() {
        if headers[..j].contains(name) {
            return Err(CliError::Data(format!(
                "{}: duplicate column name `{name}`",
                path.display()
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if record.len() != headers.len() {
            return Err(CliError::Data(format!(
                "row {}: {} cells for {} header columns",
                i + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (j, cell) in record.iter().enumerate() {
            row.push(parse_cell(cell, i + 1, &headers[j])?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok((headers, rows))
}

/// Read a labeled CSV, pulling out `target_column` and keeping the
/// remaining columns as features in file order.
pub fn read_labeled(path: &Path, target_column: &str) -> Result<LabeledData, CliError> {
    let (headers, rows) = read_table(path)?;
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| {
            CliError::Data(format!(
                "target column `{target_column}` not found; columns are: {}",
                headers.join(", ")
            ))
        })?;
    if headers.len() < 2 {
        return Err(CliError::Data(
            "need at least one feature column besides the target".into(),
        ));
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let n_cols = feature_names.len();
    let mut features = Vec::with_capacity(rows.len() * n_cols);
    let mut targets = Vec::with_capacity(rows.len());
    for row in rows {
        for (j, value) in row.iter().enumerate() {
            if j != target_idx {
                features.push(*value);
            }
        }
        targets.push(row[target_idx]);
    }
    Ok(LabeledData {
        features,
        n_cols,
        feature_names,
        targets,
    })
}

/// Read a feature CSV and reorder its columns to `feature_names`.
///
/// Missing model features are an error listing both the missing and any
/// extra columns; extra columns alone are ignored so labeled files can
/// be fed to `predict` directly.
pub fn read_features(path: &Path, feature_names: &[String]) -> Result<Vec<f64>, CliError> {
    let (headers, rows) = read_table(path)?;
    let positions: Vec<Option<usize>> = feature_names
        .iter()
        .map(|name| headers.iter().position(|h| h == name))
        .collect();
    if positions.iter().any(Option::is_none) {
        let missing: Vec<&str> = feature_names
            .iter()
            .zip(&positions)
            .filter(|(_, p)| p.is_none())
            .map(|(n, _)| n.as_str())
            .collect();
        let extra: Vec<&str> = headers
            .iter()
            .filter(|h| !feature_names.contains(h))
            .map(|h| h.as_str())
            .collect();
        return Err(CliError::Data(format!(
            "input schema does not match the model: missing columns [{}], extra columns [{}]",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let mut features = Vec::with_capacity(rows.len() * feature_names.len());
    for row in rows {
        for position in &positions {
            features.push(row[position.expect("checked above")]);
        }
    }
    Ok(features)
}

/// Shortest round-trip decimal representation.
pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}

/// Write a CSV with one header row.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Render a CSV block to a string (for stdout output).
pub fn csv_to_string(
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}
