use serde::Serialize;

use super::Frame;
use crate::stats::{ols_fit, Columnar, RegressionResult, StatsError};

/// One regression: a target and a predictor set whose first entry is the
/// focal metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSpec {
    pub target: &'static str,
    pub model: &'static str,
    pub predictors: &'static [&'static str],
}

const CLASSIC: [&str; 3] = ["file_size", "code_churn", "churn_rate"];

macro_rules! with_classic {
    ($focal:literal) => {
        &[$focal, CLASSIC[0], CLASSIC[1], CLASSIC[2]]
    };
}

/// The robustness ledger: twelve fits over ten distinct predictor sets.
pub const MODEL_LEDGER: [ModelSpec; 12] = [
    ModelSpec { target: "is_defective", model: "Days Difference", predictors: &["days_difference"] },
    ModelSpec { target: "is_defective", model: "Days Difference + Classic", predictors: with_classic!("days_difference") },
    ModelSpec { target: "is_defective", model: "Age", predictors: &["age"] },
    ModelSpec { target: "is_defective", model: "Age + Classic", predictors: with_classic!("age") },
    ModelSpec { target: "time_stage_aged_numeric", model: "Per of Minor", predictors: &["per_minor"] },
    ModelSpec {
        target: "time_stage_aged_numeric",
        model: "Per of Minor + Classic",
        predictors: with_classic!("per_minor"),
    },
    ModelSpec { target: "time_stage_aged_numeric", model: "Oss Stage Aged", predictors: &["oss_stage_aged_numeric"] },
    ModelSpec {
        target: "time_stage_aged_numeric",
        model: "Oss Stage Aged + Classic",
        predictors: with_classic!("oss_stage_aged_numeric"),
    },
    ModelSpec {
        target: "time_stage_aged_numeric",
        model: "Per of Minor + Oss Stage Aged",
        predictors: &["per_minor", "oss_stage_aged_numeric"],
    },
    ModelSpec { target: "severity", model: "Days Difference", predictors: &["days_difference"] },
    ModelSpec { target: "severity", model: "Days Difference + Classic", predictors: with_classic!("days_difference") },
    ModelSpec { target: "severity", model: "Days Difference + Minor", predictors: &["days_difference", "n_minor", "per_minor"] },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub target: String,
    pub model: String,
    pub predictors: Vec<String>,
    pub focal: String,
    pub n_rows: usize,
    pub result: Option<RegressionResult>,
    pub focal_coefficient: Option<f64>,
    /// Why the model could not be fitted.
    pub error: Option<String>,
}

/// Rows a target is fitted on: vulnerable rows for the stage target, scored
/// rows for severity and every row otherwise.
fn rows_for(frame: &Frame, target: &str) -> Frame {
    match target {
        "time_stage_aged_numeric" => frame.vulnerable(),
        "severity" => frame.with_severity(),
        _ => frame.clone(),
    }
}

fn fit(frame: &Frame, spec: &ModelSpec) -> Result<RegressionResult, StatsError> {
    let y = frame.get(spec.target).ok_or_else(|| StatsError::UnknownColumn(spec.target.to_owned()))?;
    let xs: Vec<&[f64]> = spec
        .predictors
        .iter()
        .map(|p| frame.get(p).ok_or_else(|| StatsError::UnknownColumn((*p).to_owned())))
        .collect::<Result<_, _>>()?;
    ols_fit(&xs, y)
}

/// Fits every ledger model. A model that cannot be fitted carries its error
/// and the remaining models still run.
pub fn regression_suite(frame: &Frame) -> Vec<ModelFit> {
    MODEL_LEDGER
        .iter()
        .map(|spec| {
            let subset = rows_for(frame, spec.target);
            let outcome = fit(&subset, spec);
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => {
                    log::warn!("model {} on {}: {e}", spec.model, spec.target);
                    (None, Some(e.to_string()))
                }
            };
            ModelFit {
                target: spec.target.to_owned(),
                model: spec.model.to_owned(),
                predictors: spec.predictors.iter().map(|p| (*p).to_owned()).collect(),
                focal: spec.predictors[0].to_owned(),
                n_rows: subset.n_rows(),
                focal_coefficient: result.as_ref().map(|r| r.slope(0)),
                result,
                error,
            }
        })
        .collect()
}
