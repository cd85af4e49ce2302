//! Binary design-matrix ingestion: a headed CSV with a 0/1 response column
//! named `r` and 0/1 predictor columns; the loader prepends the intercept.

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("dataset {path} has no header row")]
    MissingHeader { path: PathBuf },

    #[error("dataset {path} has no response column `r`")]
    MissingResponse { path: PathBuf },

    #[error("dataset {0} has a header but no data rows")]
    Empty(PathBuf),

    #[error("row {row} has {got} fields, header has {want}")]
    RaggedRow { row: usize, got: usize, want: usize },

    #[error("non-binary value `{value}` at row {row}, column `{column}`")]
    NonBinary {
        row: usize,
        column: String,
        value: String,
    },
}

/// The loaded design: `u` is row-major n x (p+1) with a leading ones
/// column, `y` the responses, `predictors` the column names in design
/// order (after the intercept).
#[derive(Debug, Clone)]
pub struct BinaryDesign {
    pub u: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub predictors: Vec<String>,
}

pub fn load_binary_design(path: &Path) -> Result<BinaryDesign, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DatasetError::MissingHeader { path: path.to_path_buf() })?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let response_idx = columns
        .iter()
        .position(|c| c == "r")
        .ok_or(DatasetError::MissingResponse { path: path.to_path_buf() })?;
    let predictors: Vec<String> =
        columns.iter().enumerate().filter(|(i, _)| *i != response_idx).map(|(_, c)| c.clone()).collect();

    let mut u = Vec::new();
    let mut y = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(DatasetError::RaggedRow {
                row: line_no + 1,
                got: fields.len(),
                want: columns.len(),
            });
        }
        let mut row = Vec::with_capacity(columns.len());
        row.push(1.0);
        for (idx, field) in fields.iter().enumerate() {
            let value = match *field {
                "0" => 0.0,
                "1" => 1.0,
                other => {
                    return Err(DatasetError::NonBinary {
                        row: line_no + 1,
                        column: columns[idx].clone(),
                        value: other.to_string(),
                    })
                }
            };
            if idx == response_idx {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        u.push(row);
    }
    if u.is_empty() {
        return Err(DatasetError::Empty(path.to_path_buf()));
    }
    Ok(BinaryDesign { u, y, predictors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn bundled_nodal_loads_with_expected_shape() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/nodal.csv");
        let design = load_binary_design(&path).unwrap();
        assert_eq!(design.u.len(), 53);
        assert_eq!(design.u[0].len(), 6); // intercept + 5 predictors
        assert_eq!(design.y.len(), 53);
        assert_eq!(design.predictors, vec!["aged", "stage", "grade", "xray", "acid"]);
        assert_eq!(design.y.iter().sum::<f64>(), 20.0);
    }

    #[test]
    fn single_row_accepted() {
        let f = write_temp("r,a,b\n1,0,1\n");
        let design = load_binary_design(f.path()).unwrap();
        assert_eq!(design.u, vec![vec![1.0, 0.0, 1.0]]);
        assert_eq!(design.y, vec![1.0]);
    }

    #[test]
    fn non_binary_cell_rejected_with_position() {
        let f = write_temp("r,a\n1,2\n");
        let err = load_binary_design(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("column `a`") && msg.contains('2'), "{msg}");
    }

    #[test]
    fn missing_response_rejected() {
        let f = write_temp("a,b\n0,1\n");
        assert!(matches!(
            load_binary_design(f.path()).unwrap_err(),
            DatasetError::MissingResponse { .. }
        ));
    }

    #[test]
    fn response_column_position_is_flexible() {
        let f = write_temp("a,r,b\n1,0,1\n0,1,0\n");
        let design = load_binary_design(f.path()).unwrap();
        assert_eq!(design.y, vec![0.0, 1.0]);
        assert_eq!(design.u[0], vec![1.0, 1.0, 1.0]);
        assert_eq!(design.u[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(design.predictors, vec!["a", "b"]);
    }
}
