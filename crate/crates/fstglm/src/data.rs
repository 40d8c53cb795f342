//! Datasets: a dense design matrix, binary labels, and feature names,
//! with a plain CSV interchange format (header row, label column first).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    design: Matrix<T>,
    labels: Vec<bool>,
    feature_names: Vec<String>,
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Validation("empty feature name".into()));
    }
    if name
        .chars()
        .any(|c| c == ',' || c == '"' || c.is_control())
    {
        return Err(Error::Validation(format!(
            "feature name {name:?} contains a comma, quote, or control character"
        )));
    }
    Ok(())
}

impl<T: Real> Dataset<T> {
    pub fn new(design: Matrix<T>, labels: Vec<bool>, feature_names: Vec<String>) -> Result<Self> {
        if design.rows() == 0 || design.cols() == 0 {
            return Err(Error::Validation(format!(
                "design must be non-empty, got {}x{}",
                design.rows(),
                design.cols()
            )));
        }
        if labels.len() != design.rows() {
            return Err(Error::Validation(format!(
                "{} labels for {} rows",
                labels.len(),
                design.rows()
            )));
        }
        if feature_names.len() != design.cols() {
            return Err(Error::Validation(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                design.cols()
            )));
        }
        if !design.is_finite() {
            return Err(Error::Validation("non-finite design entry".into()));
        }
        for name in &feature_names {
            check_name(name)?;
        }
        Ok(Dataset {
            design,
            labels,
            feature_names,
        })
    }

    pub fn design(&self) -> &Matrix<T> {
        &self.design
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.design.rows()
    }

    /// Number of features.
    pub fn m(&self) -> usize {
        self.design.cols()
    }

    /// Rows at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Validation("empty subset".into()));
        }
        let mut design = Matrix::zeros(indices.len(), self.m());
        let mut labels = Vec::with_capacity(indices.len());
        for (r, &i) in indices.iter().enumerate() {
            if i >= self.n() {
                return Err(Error::Validation(format!(
                    "subset index {i} out of range for {} rows",
                    self.n()
                )));
            }
            for j in 0..self.m() {
                design.set(r, j, self.design.get(i, j));
            }
            labels.push(self.labels[i]);
        }
        Ok(Dataset {
            design,
            labels,
            feature_names: self.feature_names.clone(),
        })
    }

    /// Row-wise concatenation; feature names must agree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.feature_names != other.feature_names {
            return Err(Error::Validation(
                "cannot concatenate datasets with different feature names".into(),
            ));
        }
        let mut design = Matrix::zeros(self.n() + other.n(), self.m());
        for (r, row) in self.design.iter_rows().chain(other.design.iter_rows()).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                design.set(r, j, v);
            }
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Dataset {
            design,
            labels,
            feature_names: self.feature_names.clone(),
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push('y');
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (row, &label) in self.design.iter_rows().zip(&self.labels) {
            out.push_str(if label { "1" } else { "0" });
            for &v in row {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::InputFormat {
            line: 1,
            msg: "empty file".into(),
        })?;
        let mut fields = header.split(',');
        let first = fields.next().unwrap_or("");
        if first.trim() != "y" {
            return Err(Error::InputFormat {
                line: 1,
                msg: format!("first column must be the label column `y`, got {first:?}"),
            });
        }
        let feature_names: Vec<String> = fields.map(|f| f.trim().to_string()).collect();
        if feature_names.is_empty() {
            return Err(Error::InputFormat {
                line: 1,
                msg: "no feature columns in header".into(),
            });
        }
        let m = feature_names.len();
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut labels = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let label = match fields.next().map(str::trim) {
                Some("0") => false,
                Some("1") => true,
                other => {
                    return Err(Error::InputFormat {
                        line: lineno,
                        msg: format!("label must be 0 or 1, got {:?}", other.unwrap_or("")),
                    })
                }
            };
            let mut row = Vec::with_capacity(m);
            for field in fields {
                let v: f64 = field.trim().parse().map_err(|_| Error::InputFormat {
                    line: lineno,
                    msg: format!("cannot parse {:?} as a number", field.trim()),
                })?;
                if !v.is_finite() {
                    return Err(Error::InputFormat {
                        line: lineno,
                        msg: format!("non-finite value {v}"),
                    });
                }
                row.push(T::of(v));
            }
            if row.len() != m {
                return Err(Error::InputFormat {
                    line: lineno,
                    msg: format!("expected {} feature values, got {}", m, row.len()),
                });
            }
            labels.push(label);
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InputFormat {
                line: 1,
                msg: "no data rows".into(),
            });
        }
        Dataset::new(Matrix::from_rows(rows)?, labels, feature_names)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }
}
