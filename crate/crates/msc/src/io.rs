//! File formats used by the command line tools: CSV vectors and matrices,
//! JSON reports, and the serialized operator / problem descriptions.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bench::fmt_float;
use crate::error::{MscError, Result};
use crate::operators::LinearOperator;
use crate::penalty::PenaltyKind;
use crate::solvers::ProblemSpec;

/// One number per line, no header.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path)?;
    let mut vals = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            MscError::Parse(format!("{}:{}: expected a number, got '{line}'", path.display(), i + 1))
        })?;
        vals.push(v);
    }
    if vals.is_empty() {
        return Err(MscError::Parse(format!("{}: no values", path.display())));
    }
    Ok(DVector::from_vec(vals))
}

pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut s = String::new();
    for x in v.iter() {
        s.push_str(&fmt_float(*x));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Comma-separated rows of equal length, no header.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| {
                MscError::Parse(format!(
                    "{}:{}: expected a number, got '{field}'",
                    path.display(),
                    i + 1
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(MscError::Parse(format!(
                    "{}:{}: row has {} fields, expected {}",
                    path.display(),
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MscError::Parse(format!("{}: no rows", path.display())));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_float(m[(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Scatter of (a_n * x_n, g_n) pairs for the optimality plot.
pub fn write_scatter_csv(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut s = String::from("a_x,g\n");
    for (u, g) in points {
        s.push_str(&format!("{},{}\n", fmt_float(*u), fmt_float(*g)));
    }
    fs::write(path, s)?;
    Ok(())
}

/// Serialized operator description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// Recursive difference system applied to a length-n input.
    Arma { b: Vec<f64>, a: Vec<f64>, n: usize },
    /// Explicit matrix stored as CSV, path relative to the problem file.
    Dense { path: String },
    Identity { n: usize },
}

impl OperatorSpec {
    /// `base` resolves relative Dense paths (the problem file's directory).
    pub fn build(&self, base: &Path) -> Result<LinearOperator> {
        match self {
            OperatorSpec::Arma { b, a, n } => LinearOperator::arma(b.clone(), a.clone(), *n),
            OperatorSpec::Dense { path } => {
                let p = PathBuf::from(path);
                let full = if p.is_absolute() { p } else { base.join(p) };
                Ok(LinearOperator::dense(read_matrix_csv(&full)?))
            }
            OperatorSpec::Identity { n } => {
                if *n == 0 {
                    return Err(MscError::InvalidInput("identity size 0".into()));
                }
                Ok(LinearOperator::identity(*n))
            }
        }
    }
}

/// A scalar broadcast to every coordinate, or one value per coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVector {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ScalarOrVector {
    pub fn expand(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            ScalarOrVector::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVector::Vector(v) => {
                if v.len() != n {
                    return Err(MscError::DimensionMismatch(format!(
                        "expected {n} values, got {}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

fn default_a() -> ScalarOrVector {
    ScalarOrVector::Scalar(0.0)
}

/// On-disk problem description for the solve and imsc subcommands.
/// The observation is inline (`y`) or an external CSV (`y_path`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_path: Option<String>,
    pub lambda: ScalarOrVector,
    pub penalty: PenaltyKind,
    #[serde(default = "default_a")]
    pub a: ScalarOrVector,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<ProblemFile> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Materialize the operator and observation; `base` is the directory
    /// the problem file was loaded from.
    pub fn build(&self, base: &Path) -> Result<ProblemSpec> {
        let op = self.operator.build(base)?;
        let y = match (&self.y, &self.y_path) {
            (Some(v), None) => DVector::from_vec(v.clone()),
            (None, Some(p)) => {
                let pb = PathBuf::from(p);
                let full = if pb.is_absolute() { pb } else { base.join(pb) };
                read_vector_csv(&full)?
            }
            (Some(_), Some(_)) => {
                return Err(MscError::InvalidInput(
                    "give either y or y_path, not both".into(),
                ))
            }
            (None, None) => {
                return Err(MscError::InvalidInput("one of y or y_path is required".into()))
            }
        };
        let n = op.ncols();
        let lambda = self.lambda.expand(n)?;
        let a = self.a.expand(n)?;
        ProblemSpec::new(op, y, lambda, self.penalty, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let v = DVector::from_vec(vec![1.5, -2.25, 0.0, 1e-17]);
        write_vector_csv(&path, &v).unwrap();
        assert_eq!(read_vector_csv(&path).unwrap(), v);
    }

    #[test]
    fn matrix_csv_round_trips_and_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -4.0, 5.5, 0.25]);
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), m);

        fs::write(&path, "1,2\n3\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(MscError::Parse(_))));
        fs::write(&path, "1,oops\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(MscError::Parse(_))));
    }

    #[test]
    fn problem_file_builds_a_solvable_spec() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"{
            "operator": {"type": "identity", "n": 3},
            "y": [3.0, -0.5, 0.0],
            "lambda": 1.0,
            "penalty": "atan",
            "a": 0.5
        }"#;
        let path = dir.path().join("prob.json");
        fs::write(&path, text).unwrap();
        let pf = ProblemFile::load(&path).unwrap();
        let spec = pf.build(dir.path()).unwrap();
        assert_eq!(spec.size(), 3);

        // Vector lambda of the wrong length is rejected.
        let bad = ProblemFile {
            lambda: ScalarOrVector::Vector(vec![1.0, 2.0]),
            ..pf.clone()
        };
        assert!(bad.build(dir.path()).is_err());
    }

    #[test]
    fn dense_operator_paths_resolve_relative_to_the_problem_file() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        write_matrix_csv(&dir.path().join("h.csv"), &m).unwrap();
        let spec = OperatorSpec::Dense { path: "h.csv".into() };
        let op = spec.build(dir.path()).unwrap();
        assert_eq!((op.nrows(), op.ncols()), (2, 2));
        assert_eq!(op.to_dense().unwrap()[(1, 1)], 3.0);
    }

    #[test]
    fn scalar_or_vector_expands() {
        assert_eq!(ScalarOrVector::Scalar(2.0).expand(3).unwrap(), vec![2.0; 3]);
        let v = ScalarOrVector::Vector(vec![1.0, 2.0]);
        assert_eq!(v.expand(2).unwrap(), vec![1.0, 2.0]);
        assert!(v.expand(3).is_err());
    }
}
