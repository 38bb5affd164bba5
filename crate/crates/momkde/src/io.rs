//! CSV ingestion and emission for datasets, query points, and densities.
//!
//! The reader accepts a numeric feature block with an optional header row
//! (detected by a non-numeric first row) and an optional label column.
//! Following the common anomaly-detection convention, the label value `0`
//! marks outliers unless told otherwise; writers emit `0` for outliers
//! and `1` for inliers symmetrically.

use std::path::Path;

use momkde_core::{Dataset, EvaluationGrid, Label, Points};

use crate::{Error, Result};

/// Reads a dataset from `path`.
///
/// When `label_column` names a column, that column (found by header name)
/// supplies labels: a value equal to `outlier_label_value` is an outlier,
/// anything else an inlier. The remaining columns are features in file
/// order. Without a label column the dataset is unlabeled.
pub fn load_csv_dataset(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
    outlier_label_value: f64,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut records = reader.records();

    let first = match records.next() {
        Some(record) => record?,
        None => return Err(Error::Ingest(format!("{} is empty", path.display()))),
    };
    let has_header = first.iter().any(|field| field.trim().parse::<f64>().is_err());

    let label_index = match label_column {
        Some(name) => {
            if !has_header {
                return Err(Error::Schema(format!(
                    "label column {name:?} requested but {} has no header row",
                    path.display()
                )));
            }
            Some(first.iter().position(|field| field.trim() == name).ok_or_else(|| {
                Error::Schema(format!(
                    "label column {name:?} not found in the header of {}",
                    path.display()
                ))
            })?)
        }
        None => None,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut parse_row = |record: &csv::StringRecord, line: usize| -> Result<()> {
        let mut features = Vec::with_capacity(record.len());
        for (column, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::Ingest(format!(
                    "{} row {line}: {field:?} in column {} is not a number",
                    path.display(),
                    column + 1
                ))
            })?;
            if Some(column) == label_index {
                labels.push(if value == outlier_label_value {
                    Label::Outlier
                } else {
                    Label::Inlier
                });
            } else {
                features.push(value);
            }
        }
        if features.is_empty() {
            return Err(Error::Ingest(format!(
                "{} row {line}: no feature columns left",
                path.display()
            )));
        }
        rows.push(features);
        Ok(())
    };

    if !has_header {
        parse_row(&first, 1)?;
    }
    for (i, record) in records.enumerate() {
        let line = i + 2;
        parse_row(&record?, line)?;
    }
    if rows.is_empty() {
        return Err(Error::Ingest(format!("{} has a header but no data rows", path.display())));
    }

    let points = Points::from_rows(&rows)?;
    let name = path
        .file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let labels = label_index.map(|_| labels);
    Ok(Dataset::new(points, labels, name, None)?)
}

/// Reads bare query points: a numeric CSV with no label column.
pub fn load_points_csv(path: impl AsRef<Path>) -> Result<Points> {
    Ok(load_csv_dataset(path, None, 0.0)?.points)
}

fn feature_header(dim: usize) -> Vec<String> {
    (1..=dim).map(|axis| format!("x_{axis}")).collect()
}

/// Writes a dataset as CSV with columns `x_1..x_d` plus a `label` column
/// when labels are present (0 = outlier, 1 = inlier).
pub fn write_dataset_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = feature_header(data.dim());
    if data.labels.is_some() {
        header.push("label".into());
    }
    writer.write_record(&header)?;
    for (i, row) in data.points.iter_rows().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(labels) = &data.labels {
            record.push(match labels[i] {
                Label::Outlier => "0".into(),
                Label::Inlier => "1".into(),
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes density values over grid nodes as CSV with columns
/// `x_1..x_d,value`, nodes in flat grid order.
pub fn write_density_csv(
    path: impl AsRef<Path>,
    grid: &EvaluationGrid,
    values: &[f64],
) -> Result<()> {
    if values.len() != grid.num_nodes() {
        return Err(Error::Schema(format!(
            "{} values for a grid of {} nodes",
            values.len(),
            grid.num_nodes()
        )));
    }
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = feature_header(grid.dim());
    header.push("value".into());
    writer.write_record(&header)?;
    let mut node = vec![0.0; grid.dim()];
    for (flat, value) in values.iter().enumerate() {
        grid.node(flat, &mut node);
        let mut record: Vec<String> = node.iter().map(|v| format!("{v}")).collect();
        record.push(format!("{value}"));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes per-point scores as CSV with columns `x_1..x_d,value`.
pub fn write_scores_csv(
    path: impl AsRef<Path>,
    points: &Points,
    values: &[f64],
) -> Result<()> {
    if values.len() != points.n() {
        return Err(Error::Schema(format!(
            "{} values for {} query points",
            values.len(),
            points.n()
        )));
    }
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = feature_header(points.dim());
    header.push("value".into());
    writer.write_record(&header)?;
    for (row, value) in points.iter_rows().zip(values) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        record.push(format!("{value}"));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
