//! Comma-separated datasets: one sample per row, label in the last column.
//!
//! A first row that does not parse as numbers is treated as a header and
//! skipped. Files are written without a header, numbers with 17 significant
//! digits so that loading a saved dataset reproduces it bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use dann_core::data::Dataset;
use dann_core::Matrix;

use crate::error::{CliError, Result};

pub fn load_csv(path: &Path, has_labels: bool) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let domain = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, has_labels, path, &domain)
}

/// `path` only labels error messages.
pub fn read_csv<R: Read>(reader: R, has_labels: bool, path: &Path, domain: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("expected {w} columns, found {}", record.len()),
                ))
            }
            Some(_) => {}
        }
        let n_feat = if has_labels {
            if record.len() < 2 {
                return Err(CliError::parse(
                    path,
                    line,
                    "labeled rows need at least one feature column",
                ));
            }
            let raw = &record[record.len() - 1];
            let label = raw.parse::<usize>().map_err(|_| {
                CliError::parse(path, line, format!("label {raw:?} is not a non-negative integer"))
            })?;
            labels.push(label);
            record.len() - 1
        } else {
            record.len()
        };
        for (col, field) in record.iter().take(n_feat).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(
                    path,
                    line,
                    format!("column {}: {field:?} is not a number", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("column {}: non-finite value", col + 1),
                ));
            }
            values.push(v);
        }
    }

    let Some(width) = width else {
        return Err(CliError::parse(path, 1, "no data rows"));
    };
    let d = if has_labels { width - 1 } else { width };
    let n = values.len() / d;
    let features = Matrix::from_vec(n, d, values)?;
    let ds = if has_labels {
        Dataset::labeled(features, labels, domain)
    } else {
        Dataset::unlabeled(features, domain)
    };
    ds.map_err(|source| CliError::Context {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, ds)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_csv<W: Write>(w: &mut W, ds: &Dataset) -> std::io::Result<()> {
    let labels = ds.labels();
    for (i, row) in ds.features().iter_rows().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        if let Some(labels) = labels {
            fields.push(labels[i].to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// 17 significant digits; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
