//! Time and release metrics: spans in days, Time Stage and OSS Stage
//! classification, release counts and the pre/post-release dichotomy.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::ingest::ReleaseRecord;
use crate::{Timestamp, SECONDS_PER_DAY};

/// Fixed-length calendar used for every stage boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calendar {
    pub month_days: f64,
    pub year_days: f64,
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar {
            month_days: 30.0,
            year_days: 365.0,
        }
    }
}

impl Calendar {
    pub fn months(&self, n: f64) -> f64 {
        n * self.month_days
    }

    pub fn years(&self, n: f64) -> f64 {
        n * self.year_days
    }
}

fn span_days(origin: Timestamp, event: Timestamp) -> Result<f64, MetricsError> {
    if event < origin {
        return Err(MetricsError::NegativeSpan { origin, event });
    }
    Ok((event - origin) as f64 / SECONDS_PER_DAY)
}

/// Days from the project's first commit to the vulnerability event.
pub fn days_difference(project_start: Timestamp, event: Timestamp) -> Result<f64, MetricsError> {
    span_days(project_start, event)
}

/// Days from the component's first commit to the vulnerability event.
pub fn component_age(first_touch: Timestamp, event: Timestamp) -> Result<f64, MetricsError> {
    span_days(first_touch, event)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimeStage {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TimeStage {
    pub fn numeric(self) -> u8 {
        self as u8 + 1
    }
}

/// Buckets a non-negative duration in days.
///
/// `T1: 0 ≤ d ≤ 7d`, `T2: ≤ 3 months`, `T3: ≤ 9 months`, `T4: < 3 years`,
/// `T5: ≥ 3 years`. Negative or NaN input is treated as zero.
pub fn time_stage(days: f64, cal: &Calendar) -> TimeStage {
    if days >= cal.years(3.0) {
        TimeStage::T5
    } else if days > cal.months(9.0) {
        TimeStage::T4
    } else if days > cal.months(3.0) {
        TimeStage::T3
    } else if days > 7.0 {
        TimeStage::T2
    } else {
        TimeStage::T1
    }
}

/// Open-source lifecycle stage, numbered in enumeration order (SI = 1 … TG = 6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OssStage {
    /// Success initiation: at least one release.
    SI,
    /// Tragedy initiation: no release for over a year.
    TI,
    /// Indeterminate initiation: no release yet, under a year old.
    II,
    /// Indeterminate growth.
    IG,
    /// Success growth: three or more releases over more than six months.
    SG,
    /// Tragedy growth: one or two releases, the last over a year ago.
    TG,
}

impl OssStage {
    pub fn numeric(self) -> u8 {
        self as u8 + 1
    }
}

/// Releases observed over a window `[origin, evaluation]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseTimeline<'a> {
    /// Sorted ascending by timestamp.
    pub releases: &'a [ReleaseRecord],
    pub origin: Timestamp,
    pub evaluation: Timestamp,
}

impl<'a> ReleaseTimeline<'a> {
    pub fn new(releases: &'a [ReleaseRecord], origin: Timestamp, evaluation: Timestamp) -> Result<Self, MetricsError> {
        if evaluation < origin {
            return Err(MetricsError::NegativeSpan {
                origin,
                event: evaluation,
            });
        }
        Ok(ReleaseTimeline {
            releases,
            origin,
            evaluation,
        })
    }

    /// Releases inside the window.
    pub fn in_window(&self) -> &'a [ReleaseRecord] {
        let lo = self.releases.partition_point(|r| r.timestamp < self.origin);
        let hi = self.releases.partition_point(|r| r.timestamp <= self.evaluation);
        &self.releases[lo..hi.max(lo)]
    }
}

/// Classifies a timeline with a fixed precedence chain, so that overlapping
/// stage predicates always resolve to one label:
///
/// 1. no release and over a year elapsed → TI
/// 2. no release → II
/// 3. ≥ 3 releases and growth phase over 6 months → SG
/// 4. 1–2 releases and the last one over a year ago → TG
/// 5. (< 3 releases and under a year elapsed) or (3 releases, growth under 6 months) → IG
/// 6. otherwise → SI
pub fn oss_stage(timeline: &ReleaseTimeline<'_>, cal: &Calendar) -> OssStage {
    let window = timeline.in_window();
    let n = window.len();
    let days = |secs: Timestamp| secs as f64 / SECONDS_PER_DAY;
    let elapsed = days(timeline.evaluation - timeline.origin);
    let year = cal.years(1.0);
    let half_year = cal.months(6.0);

    let (growth, since_last) = match (window.first(), window.last()) {
        (Some(first), Some(last)) => (days(last.timestamp - first.timestamp), days(timeline.evaluation - last.timestamp)),
        _ => (0.0, elapsed),
    };

    if n == 0 {
        if elapsed > year {
            OssStage::TI
        } else {
            OssStage::II
        }
    } else if n >= 3 && growth > half_year {
        OssStage::SG
    } else if n <= 2 && since_last > year {
        OssStage::TG
    } else if (n < 3 && elapsed < year) || (n == 3 && growth < half_year) {
        OssStage::IG
    } else {
        OssStage::SI
    }
}

/// `(release_amounts, release_amounts_aged)`: releases in
/// `[project_start, event]` and in `[first_touch, event]`.
pub fn release_counts(
    releases: &[ReleaseRecord],
    project_start: Timestamp,
    first_touch: Timestamp,
    event: Timestamp,
) -> (u64, u64) {
    let count = |from: Timestamp| {
        releases
            .iter()
            .filter(|r| r.timestamp >= from && r.timestamp <= event)
            .count() as u64
    };
    (count(project_start), count(first_touch.max(project_start)))
}

/// `(is_pre_release, is_post_release)` relative to the project's first
/// release; `(0, 0)` when the project has none.
pub fn pre_post_flags(event: Timestamp, releases: &[ReleaseRecord]) -> (u8, u8) {
    match releases.iter().map(|r| r.timestamp).min() {
        None => (0, 0),
        Some(first) if event < first => (1, 0),
        Some(_) => (0, 1),
    }
}
