//! Statistics kernel: correlation coefficients and matrices, matrix
//! distances and similarities, the two-sample K-S test, the Mantel
//! permutation test and ordinary least squares.

mod correlation;
mod distance;
mod ks;
mod mantel;
mod ols;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{correlation, correlation_matrix, kendall, pearson, rank_with_ties, spearman, CorrelationMatrix};
pub use distance::{cosine_similarity, expdecay_similarity, frobenius_distance, minmax_similarity, MinMaxSimilarity};
pub use ks::{kolmogorov_survival, ks_two_sample, KsResult};
pub use mantel::{correlation_to_distance, mantel, Alternative, MantelResult, Permutations};
pub use ols::{ols_fit, RegressionResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("sample is empty")]
    EmptySample,
    #[error("lambda {0} must be positive")]
    InvalidLambda(f64),
    #[error("distance {0} must be non-negative")]
    NegativeDistance(f64),
    /// Zero-based predictor indices that lie in the span of the intercept and earlier predictors.
    #[error("predictor columns {columns:?} are collinear")]
    RankDeficient { columns: Vec<usize> },
    #[error("statistic is undefined on constant input")]
    Undefined,
}

/// Correlation coefficient family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Spearman,
    Kendall,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pearson, Method::Spearman, Method::Kendall];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
            Method::Kendall => "kendall",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Method::Pearson),
            "spearman" => Ok(Method::Spearman),
            "kendall" => Ok(Method::Kendall),
            other => Err(format!("unknown correlation method {other:?}")),
        }
    }
}

/// A table that can hand out named numeric columns.
pub trait Columnar {
    fn n_rows(&self) -> usize;
    fn column(&self, name: &str) -> Option<Vec<f64>>;
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
