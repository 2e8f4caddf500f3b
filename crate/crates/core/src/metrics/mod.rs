//! Per-component ownership, classic and time/release metrics.

mod history;
mod ownership;
mod row;
mod time;

use thiserror::Error;

pub use history::{ClassicMetrics, ContributionLedger, History};
pub use ownership::{ownership_profile, OwnershipProfile, DEFAULT_MINOR_THRESHOLD};
pub use row::{
    assemble_group_row, assemble_metric_row, assemble_repository_row, build_metric_table, read_metrics_csv,
    write_metrics_csv, EventSource, Exclusion, MetricRow, ProjectContext, METRIC_COLUMNS,
};
pub use time::{
    component_age, days_difference, oss_stage, pre_post_flags, release_counts, time_stage, Calendar, OssStage,
    ReleaseTimeline, TimeStage,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("component {0:?} is not touched by any counted commit at or before the cutoff")]
    ComponentUnknown(String),
    #[error("minor-contributor threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("event at {event} precedes origin {origin}")]
    NegativeSpan { origin: i64, event: i64 },
    #[error("history contains no commits")]
    EmptyHistory,
}
