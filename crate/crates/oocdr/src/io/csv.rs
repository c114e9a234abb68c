//! One-way CSV to matrix-file conversion.
//!
//! Detection rules, applied over the whole file in a first pass:
//! a header row is assumed when any field of the first line fails to
//! parse as a number, and the final column is treated as labels when the
//! file has at least two columns and every value in it parses as a
//! 32-bit integer (so "3.0" stays data, "3" becomes a label).

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

use super::{MatrixHeader, MatrixWriter};

struct CsvShape {
    n_cols: usize,
    has_header: bool,
    label_column: bool,
}

fn scan_shape(path: &Path) -> Result<CsvShape> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut n_cols = None;
    let mut has_header = false;
    let mut label_column = true;
    let mut data_rows = 0u64;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match n_cols {
            None => {
                n_cols = Some(fields.len());
                if fields.iter().any(|f| f.parse::<f64>().is_err()) {
                    has_header = true;
                    continue;
                }
            }
            Some(n) if n != fields.len() => {
                return Err(Error::format(
                    path,
                    format!(
                        "line {}: expected {} columns, found {}",
                        line_no + 1,
                        n,
                        fields.len()
                    ),
                ));
            }
            _ => {}
        }
        data_rows += 1;
        if label_column {
            label_column = fields.last().is_some_and(|f| f.parse::<i32>().is_ok());
        }
    }
    let n_cols = n_cols.ok_or_else(|| Error::format(path, "empty file"))?;
    if data_rows == 0 {
        return Err(Error::format(path, "no data rows"));
    }
    if n_cols < 2 {
        label_column = false;
    }
    Ok(CsvShape {
        n_cols,
        has_header,
        label_column,
    })
}

/// Convert a CSV file into the matrix format at `dst`. Two streaming
/// passes: one to detect the shape, one to write rows, so memory stays
/// at O(columns).
pub fn import_csv(src: impl AsRef<Path>, dst: impl AsRef<Path>) -> Result<MatrixHeader> {
    let src = src.as_ref();
    let shape = scan_shape(src)?;
    let dims = if shape.label_column {
        shape.n_cols - 1
    } else {
        shape.n_cols
    };
    let mut writer = MatrixWriter::create(&dst, dims as u32, shape.label_column)?;
    let reader = BufReader::new(File::open(src).map_err(|e| Error::io(src, e))?);
    let mut row = Vec::with_capacity(dims);
    let mut seen_any = false;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(src, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if shape.has_header && !seen_any {
            seen_any = true;
            continue;
        }
        seen_any = true;
        row.clear();
        let mut label = None;
        for (col, field) in line.split(',').map(str::trim).enumerate() {
            if shape.label_column && col == shape.n_cols - 1 {
                label = Some(field.parse::<i32>().map_err(|_| {
                    Error::format(src, format!("line {}: bad label {field:?}", line_no + 1))
                })?);
            } else {
                let v = field.parse::<f64>().map_err(|_| {
                    Error::format(src, format!("line {}: bad number {field:?}", line_no + 1))
                })?;
                if !v.is_finite() {
                    return Err(Error::format(
                        src,
                        format!("line {}: non-finite value {field:?}", line_no + 1),
                    ));
                }
                row.push(v as f32);
            }
        }
        writer.write_row(&row, label)?;
    }
    writer.finish()
}
