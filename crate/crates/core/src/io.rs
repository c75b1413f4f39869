//! Headerless row-major CSV for raw matrices and vectors.

use std::fs::File;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if *ncols.get_or_insert(record.len()) != record.len() {
            return Err(parse_err(format!(
                "row {} has {} fields, expected {}",
                nrows + 1,
                record.len(),
                ncols.unwrap()
            )));
        }
        for field in &record {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("row {}: cannot parse {field:?}", nrows + 1)))?;
            values.push(v);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| parse_err("file contains no data".into()))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &values))
}

/// Reads a vector stored either as one column or as one row.
pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    match m.shape() {
        (_, 1) => Ok(m.column(0).into_owned()),
        (1, _) => Ok(m.row(0).transpose()),
        (r, c) => Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected a vector, found {r}x{c}"),
        }),
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    let to_io = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    for row in m.row_iter() {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(to_io)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes a vector as a single column.
pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_matrix(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}
