//! CSV datasets: a header row, one named response column, and numeric feature
//! columns in file order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use fusedhuber_core::{Matrix, ProblemData};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("response column {0:?} not found in header")]
    NoResponse(String),
    #[error("need at least 2 feature columns, found {0}")]
    TooFewFeatures(usize),
    #[error("no data rows after the header")]
    Empty,
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column:?}: missing value")]
    Missing { line: u64, column: String },
    #[error("line {line}, column {column:?}: {value:?} is not a finite number")]
    NotNumeric { line: u64, column: String, value: String },
    #[error(transparent)]
    Core(#[from] fusedhuber_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub problem: ProblemData,
    pub feature_names: Vec<String>,
    pub response: String,
}

const MISSING: [&str; 6] = ["", "na", "nan", "null", "none", "?"];

fn parse_cell(raw: &str, line: u64, column: &str) -> Result<f64, DatasetError> {
    let cell = raw.trim();
    if MISSING.contains(&cell.to_ascii_lowercase().as_str()) {
        return Err(DatasetError::Missing { line, column: column.to_string() });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DatasetError::NotNumeric { line, column: column.to_string(), value: cell.to_string() }),
    }
}

/// Parses CSV text; `line` numbers in errors count the header as line 1.
pub fn read_dataset(reader: impl Read, response: &str) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target = header.iter().position(|h| h == response).ok_or_else(|| DatasetError::NoResponse(response.to_string()))?;
    let feature_names: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != target).map(|(_, h)| h.clone()).collect();
    if feature_names.len() < 2 {
        return Err(DatasetError::TooFewFeatures(feature_names.len()));
    }

    let p = feature_names.len();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() != header.len() {
            return Err(DatasetError::Ragged { line, expected: header.len(), found: record.len() });
        }
        for (i, raw) in record.iter().enumerate() {
            let v = parse_cell(raw, line, &header[i])?;
            if i == target {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(DatasetError::Empty);
    }
    let problem = ProblemData::new(Matrix::from_row_major(y.len(), p, x)?, y)?;
    Ok(Dataset { problem, feature_names, response: response.to_string() })
}

pub fn load_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    read_dataset(std::io::BufReader::new(file), response)
}

/// Default feature names `x1, ..., xp`.
pub fn default_feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// Writes the response first, then the features. Values use Rust's shortest
/// round-trip formatting, so a save/load cycle is lossless.
pub fn write_dataset(writer: impl Write, data: &ProblemData, feature_names: &[String], response: &str) -> Result<(), DatasetError> {
    if feature_names.len() != data.p() {
        return Err(fusedhuber_core::Error::DimensionMismatch { what: "feature names", expected: data.p(), found: feature_names.len() }.into());
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![response.to_string()];
    header.extend(feature_names.iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(data.p() + 1);
    for (i, xi) in data.x().rows().enumerate() {
        row.clear();
        row.push(data.y()[i].to_string());
        row.extend(xi.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| DatasetError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, data: &ProblemData, feature_names: &[String], response: &str) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    write_dataset(std::io::BufWriter::new(file), data, feature_names, response)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_response_anywhere() {
        let text = "a,y,b\n1,2,3\n4,5,6\n";
        let d = read_dataset(text.as_bytes(), "y").unwrap();
        assert_eq!(d.feature_names, vec!["a", "b"]);
        assert_eq!(d.problem.y(), &[2.0, 5.0]);
        assert_eq!(d.problem.x().row(1), &[4.0, 6.0]);
    }

    #[test]
    fn reports_missing_cell_location() {
        let text = "y,a,b\n1,2,3\n4,NA,6\n";
        match read_dataset(text.as_bytes(), "y").unwrap_err() {
            DatasetError::Missing { line, column } => {
                assert_eq!(line, 3);
                assert_eq!(column, "a");
            }
            e => panic!("unexpected {e}"),
        }
        let err = read_dataset("y,a,b\n1,x,3\n".as_bytes(), "y").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("\"a\""), "{err}");
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(read_dataset("y,a,b\n".as_bytes(), "y"), Err(DatasetError::Empty)));
        assert!(matches!(read_dataset("y,a\n1,2\n".as_bytes(), "y"), Err(DatasetError::TooFewFeatures(1))));
        assert!(matches!(read_dataset("a,b,c\n1,2,3\n".as_bytes(), "y"), Err(DatasetError::NoResponse(_))));
        assert!(matches!(read_dataset("y,a,b\n1,2\n".as_bytes(), "y"), Err(DatasetError::Ragged { line: 2, .. })));
        assert!(matches!(read_dataset("y,a,b\n1,2,inf\n".as_bytes(), "y"), Err(DatasetError::NotNumeric { .. })));
    }
}
