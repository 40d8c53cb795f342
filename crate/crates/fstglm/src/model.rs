//! Fitted classifiers: prediction, sparsity accounting, and a versioned
//! JSON file format with a bit-exact round trip.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::{skew_t_link, LinkSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Name given to the prepended all-ones column when an intercept is fitted.
pub const INTERCEPT_NAME: &str = "(intercept)";

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel<T> {
    /// Coefficients aligned with `feature_names`; exact zeros are pruned
    /// coordinates. When `intercept_included`, slot 0 is the intercept.
    pub beta: Vec<T>,
    pub link: LinkSpec<T>,
    pub gamma: T,
    pub feature_names: Vec<String>,
    pub converged: bool,
    pub intercept_included: bool,
}

impl<T: Real> FittedModel<T> {
    pub fn new(
        beta: Vec<T>,
        link: LinkSpec<T>,
        gamma: T,
        feature_names: Vec<String>,
        converged: bool,
        intercept_included: bool,
    ) -> Result<Self> {
        if beta.len() != feature_names.len() {
            return Err(Error::Validation(format!(
                "{} coefficients for {} feature names",
                beta.len(),
                feature_names.len()
            )));
        }
        if beta.is_empty() {
            return Err(Error::Validation("empty coefficient vector".into()));
        }
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite coefficient".into()));
        }
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::Validation(format!("gamma must be positive, got {gamma}")));
        }
        if intercept_included && feature_names[0] != INTERCEPT_NAME {
            return Err(Error::Validation(format!(
                "intercept models name their first coordinate {INTERCEPT_NAME:?}"
            )));
        }
        Ok(FittedModel {
            beta,
            link,
            gamma,
            feature_names,
            converged,
            intercept_included,
        })
    }

    /// Names of the data features the model consumes (intercept slot excluded).
    pub fn input_names(&self) -> &[String] {
        if self.intercept_included {
            &self.feature_names[1..]
        } else {
            &self.feature_names
        }
    }

    /// First mismatch between the model's inputs and a dataset header, if any.
    pub fn check_features(&self, names: &[String]) -> Result<()> {
        let expect = self.input_names();
        if names.len() != expect.len() {
            return Err(Error::InputFormat {
                line: 1,
                msg: format!(
                    "model takes {} features, data has {}",
                    expect.len(),
                    names.len()
                ),
            });
        }
        for (i, (a, b)) in expect.iter().zip(names).enumerate() {
            if a != b {
                return Err(Error::InputFormat {
                    line: 1,
                    msg: format!("feature {i}: model expects {a:?}, data has {b:?}"),
                });
            }
        }
        Ok(())
    }

    pub fn linear_predictor(&self, x: &[T]) -> Result<T> {
        let expect = self.input_names().len();
        if x.len() != expect {
            return Err(Error::Validation(format!(
                "feature vector has {} entries, model takes {}",
                x.len(),
                expect
            )));
        }
        Ok(if self.intercept_included {
            self.beta[0] + dot(&self.beta[1..], x)
        } else {
            dot(&self.beta, x)
        })
    }

    pub fn predict_proba(&self, x: &[T]) -> Result<T> {
        Ok(skew_t_link(self.linear_predictor(x)?, self.link))
    }

    /// Label 1 iff the probability strictly exceeds the threshold; ties go to 0.
    pub fn classify_at(&self, x: &[T], threshold: T) -> Result<bool> {
        Ok(self.predict_proba(x)? > threshold)
    }

    pub fn classify(&self, x: &[T]) -> Result<bool> {
        self.classify_at(x, T::of(0.5))
    }

    pub fn predict_proba_rows(&self, design: &Matrix<T>) -> Result<Vec<T>> {
        design.iter_rows().map(|row| self.predict_proba(row)).collect()
    }

    pub fn classify_rows(&self, design: &Matrix<T>) -> Result<Vec<bool>> {
        design.iter_rows().map(|row| self.classify(row)).collect()
    }

    /// Number of coefficients pruned to exactly zero.
    pub fn sparsity_count(&self) -> usize {
        self.beta.iter().filter(|&&v| v == T::zero()).count()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    nu: f64,
    delta: f64,
    gamma: f64,
    converged: bool,
    intercept_included: bool,
    feature_names: Vec<String>,
    beta: Vec<f64>,
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    // serde_json reports 1-based line/column; recover the absolute offset.
    let mut offset = 0usize;
    for (i, l) in text.split('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    text.len()
}

pub fn save_model<T: Real>(model: &FittedModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        nu: model.link.nu.to_f64().unwrap(),
        delta: model.link.delta.to_f64().unwrap(),
        gamma: model.gamma.to_f64().unwrap(),
        converged: model.converged,
        intercept_included: model.intercept_included,
        feature_names: model.feature_names.clone(),
        beta: model.beta.iter().map(|v| v.to_f64().unwrap()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Numerical(format!("model serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<FittedModel<T>> {
    let text = fs::read_to_string(path)?;
    from_json_str(&text)
}

pub fn from_json_str<T: Real>(text: &str) -> Result<FittedModel<T>> {
    let parse_err = |e: &serde_json::Error| Error::InputFormat {
        line: e.line(),
        msg: format!(
            "invalid model file at byte {}: {}",
            byte_offset(text, e.line(), e.column()),
            e
        ),
    };
    // Check the version before insisting on the full field layout, so files
    // from a future schema fail with a version error rather than a parse error.
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_err(&e))?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or(Error::InputFormat {
            line: 1,
            msg: "missing schema_version".into(),
        })? as u32;
    if found != MODEL_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            expected: MODEL_SCHEMA_VERSION,
            found,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| parse_err(&e))?;
    let link = LinkSpec::skew(T::of(file.nu), T::of(file.delta))?;
    FittedModel::new(
        file.beta.into_iter().map(T::of).collect(),
        link,
        T::of(file.gamma),
        file.feature_names,
        file.converged,
        file.intercept_included,
    )
}
