//! Ownership, classic and time/release metrics over version-control
//! histories joined with vulnerability records, plus the statistics kernel
//! and experiment drivers that correlate those metrics with vulnerabilities.
//!
//! The crate is organised bottom-up:
//!
//! - [`ingest`] parses commit logs, release lists and advisory records.
//! - [`metrics`] turns a history into per-component metric rows.
//! - [`stats`] holds the correlation, distance, K-S, Mantel and OLS kernels.
//! - [`analysis`] assembles datasets and runs the correlation reports,
//!   the regression suite and the distortion sweeps.

pub mod analysis;
pub mod ingest;
pub mod metrics;
pub mod stats;

pub use ingest::{CommitRecord, FileChange, LineDelta, ReleaseRecord, VulnerabilityRecord};
pub use metrics::{
    Calendar, ClassicMetrics, ContributionLedger, History, MetricRow, OssStage,
    OwnershipProfile, TimeStage,
};
pub use stats::{CorrelationMatrix, Method, RegressionResult};

/// UTC unix seconds.
pub type Timestamp = i64;

/// Seconds in one day.
pub const SECONDS_PER_DAY: f64 = 86_400.0;
