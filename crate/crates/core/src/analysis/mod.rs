//! Experiment drivers: dataset assembly, correlation reports against the
//! vulnerability targets, the regression robustness ledger and the three
//! distortion checks (ratio, threshold and locality sweeps).

mod dataset;
mod frame;
mod regression;
mod reports;
mod sweep;

use thiserror::Error;

use crate::ingest::{ReleaseRecord, VulnerabilityRecord};
use crate::metrics::{build_metric_table, Calendar, Exclusion, History, MetricRow, MetricsError, ProjectContext};
use crate::stats::StatsError;

pub use dataset::{build_dataset, nonvulnerable_count, split_by_class, DatasetSpec, RatioReading};
pub use frame::Frame;
pub use regression::{regression_suite, ModelFit, ModelSpec, MODEL_LEDGER};
pub use reports::{
    direct_correlation_report, severity_correlation_report, staged_correlation_report, CorrelationCell,
    CorrelationReport, CorrelationRow,
};
pub use sweep::{
    locality_check, ratio_sweep, threshold_sweep, GroupSummary, LocalityReport, PairMode, PairStats, SweepAxis, SweepConfig,
    SweepPoint, SweepReport, SweepSummary, RATIO_SETTINGS, THRESHOLD_SETTINGS,
};

/// Metric columns entering every correlation matrix, in report row order.
pub const CORE_METRICS: [&str; 10] = [
    "ownership",
    "n_contributors",
    "n_minor",
    "per_minor",
    "days_difference",
    "age",
    "oss_stage_aged_numeric",
    "file_size",
    "code_churn",
    "churn_rate",
];

/// Severity report rows: the core metrics followed by the release columns.
pub const SEVERITY_METRICS: [&str; 14] = [
    "ownership",
    "n_contributors",
    "n_minor",
    "per_minor",
    "days_difference",
    "age",
    "oss_stage_aged_numeric",
    "file_size",
    "code_churn",
    "churn_rate",
    "is_pre_release",
    "is_post_release",
    "release_amounts",
    "release_amounts_aged",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("target {0:?} is constant; both classes are required")]
    SingleClass(String),
    #[error("no row carries a severity score")]
    NoSeverityRows,
    #[error("requested {requested} non-vulnerable rows but the pool holds {available}")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("locality check needs at least two groups, found {0}")]
    SingleGroup(usize),
    #[error("ratio {0} is out of range")]
    InvalidRatio(f64),
    #[error("no vulnerable rows")]
    NoVulnerableRows,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl AnalysisError {
    /// True when the data cannot support the analysis, as opposed to bad input.
    pub fn is_degenerate(&self) -> bool {
        !matches!(self, AnalysisError::Metrics(_) | AnalysisError::InvalidRatio(_))
    }
}

/// Raw inputs shared by the sweeps that recompute metrics.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub history: History,
    /// Sorted ascending by timestamp.
    pub releases: Vec<ReleaseRecord>,
    pub vulns: Vec<VulnerabilityRecord>,
    pub calendar: Calendar,
}

impl Corpus {
    pub fn context(&self, threshold: f64) -> ProjectContext<'_> {
        ProjectContext {
            history: &self.history,
            releases: &self.releases,
            threshold,
            calendar: self.calendar,
        }
    }

    pub fn metric_table(&self, threshold: f64) -> Result<(Vec<MetricRow>, Vec<Exclusion>), MetricsError> {
        build_metric_table(&self.context(threshold), &self.vulns)
    }
}
