//! Metric rows: one `(component, event)` observation carrying every metric column.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    component_age, days_difference, oss_stage, ownership_profile, pre_post_flags, release_counts, time_stage,
    Calendar, ClassicMetrics, ContributionLedger, History, MetricsError, ReleaseTimeline,
};
use crate::ingest::{ReleaseRecord, VulnerabilityRecord};
use crate::Timestamp;

/// Column names in CSV order.
pub const METRIC_COLUMNS: [&str; 18] = [
    "component",
    "is_defective",
    "severity",
    "ownership",
    "n_contributors",
    "n_minor",
    "per_minor",
    "days_difference",
    "age",
    "time_stage_aged_numeric",
    "oss_stage_aged_numeric",
    "file_size",
    "code_churn",
    "churn_rate",
    "is_pre_release",
    "is_post_release",
    "release_amounts",
    "release_amounts_aged",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub component: String,
    pub is_defective: u8,
    pub severity: Option<f64>,
    pub ownership: f64,
    pub n_contributors: u64,
    pub n_minor: u64,
    pub per_minor: f64,
    pub days_difference: f64,
    pub age: f64,
    pub time_stage_aged_numeric: u8,
    pub oss_stage_aged_numeric: u8,
    pub file_size: u64,
    pub code_churn: u64,
    pub churn_rate: f64,
    pub is_pre_release: u8,
    pub is_post_release: u8,
    pub release_amounts: u64,
    pub release_amounts_aged: u64,
}

impl MetricRow {
    /// Numeric value of a column; absent severity reads as NaN.
    /// Returns `None` for unknown names and for `component`.
    pub fn value(&self, column: &str) -> Option<f64> {
        Some(match column {
            "is_defective" => self.is_defective as f64,
            "severity" => self.severity.unwrap_or(f64::NAN),
            "ownership" => self.ownership,
            "n_contributors" => self.n_contributors as f64,
            "n_minor" => self.n_minor as f64,
            "per_minor" => self.per_minor,
            "days_difference" => self.days_difference,
            "age" => self.age,
            "time_stage_aged_numeric" => self.time_stage_aged_numeric as f64,
            "oss_stage_aged_numeric" => self.oss_stage_aged_numeric as f64,
            "file_size" => self.file_size as f64,
            "code_churn" => self.code_churn as f64,
            "churn_rate" => self.churn_rate,
            "is_pre_release" => self.is_pre_release as f64,
            "is_post_release" => self.is_post_release as f64,
            "release_amounts" => self.release_amounts as f64,
            "release_amounts_aged" => self.release_amounts_aged as f64,
            _ => return None,
        })
    }

    /// Replaces the estimated size with an exact line count.
    pub fn set_file_size(&mut self, lines: u64) {
        let m = ClassicMetrics::new(lines, self.code_churn);
        self.file_size = m.file_size;
        self.churn_rate = m.churn_rate;
    }
}

/// Shared inputs for row assembly.
#[derive(Debug, Clone, Copy)]
pub struct ProjectContext<'a> {
    pub history: &'a History,
    /// Sorted ascending by timestamp.
    pub releases: &'a [ReleaseRecord],
    pub threshold: f64,
    pub calendar: Calendar,
}

/// What a row is evaluated against.
#[derive(Debug, Clone, Copy)]
pub enum EventSource<'a> {
    /// A vulnerable row, evaluated at the advisory's publication time.
    Vulnerability(&'a VulnerabilityRecord),
    /// A non-vulnerable row, evaluated at the last commit of the history.
    Snapshot,
}

/// A `(vulnerability, component)` pair that produced no row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub vulnerability: String,
    pub component: String,
    pub reason: String,
}

pub fn assemble_metric_row(
    ctx: &ProjectContext<'_>,
    component: &str,
    source: EventSource<'_>,
) -> Result<MetricRow, MetricsError> {
    assemble_group_row(ctx, component, &[component], source)
}

/// Builds one row for a group of components treated as a single unit.
///
/// Ledgers are merged by summing counts, classic metrics are summed and the
/// group's origin is its oldest member's first touch. Members not yet touched
/// at the event are ignored; the group fails only if none is known.
/// A single-member group yields exactly the file-level row.
pub fn assemble_group_row(
    ctx: &ProjectContext<'_>,
    name: &str,
    members: &[&str],
    source: EventSource<'_>,
) -> Result<MetricRow, MetricsError> {
    let (event, is_defective, severity) = match source {
        EventSource::Vulnerability(v) => (v.published, 1, v.severity),
        EventSource::Snapshot => (ctx.history.snapshot(), 0, None),
    };

    let mut ledgers = Vec::with_capacity(members.len());
    let mut classics = Vec::with_capacity(members.len());
    let mut first_touch = Timestamp::MAX;
    let mut last_err = None;
    for &m in members {
        match ctx.history.build_ledger(m, event) {
            Ok(l) => {
                ledgers.push(l);
                classics.push(ctx.history.classic_metrics(m, event)?);
                first_touch = first_touch.min(ctx.history.first_touch(m)?);
            }
            Err(e) => last_err = Some(e),
        }
    }
    if ledgers.is_empty() {
        return Err(last_err.unwrap_or_else(|| MetricsError::ComponentUnknown(name.to_owned())));
    }

    let ledger = if ledgers.len() == 1 {
        ledgers.pop().expect("one ledger")
    } else {
        ContributionLedger::merge(name, &ledgers)
    };
    let profile = ownership_profile(&ledger, ctx.threshold)?;
    let classic = if classics.len() == 1 {
        classics[0]
    } else {
        ClassicMetrics::sum(&classics)
    };

    let project_start = ctx.history.project_start();
    let days_difference = days_difference(project_start, event)?;
    let age = component_age(first_touch, event)?;
    let aged_timeline = ReleaseTimeline::new(ctx.releases, first_touch, event)?;
    let (release_amounts, release_amounts_aged) = release_counts(ctx.releases, project_start, first_touch, event);
    let (is_pre_release, is_post_release) = pre_post_flags(event, ctx.releases);

    Ok(MetricRow {
        component: name.to_owned(),
        is_defective,
        severity,
        ownership: profile.ownership,
        n_contributors: profile.n_contributors,
        n_minor: profile.n_minor,
        per_minor: profile.per_minor,
        days_difference,
        age,
        time_stage_aged_numeric: time_stage(age, &ctx.calendar).numeric(),
        oss_stage_aged_numeric: oss_stage(&aged_timeline, &ctx.calendar).numeric(),
        file_size: classic.file_size,
        code_churn: classic.code_churn,
        churn_rate: classic.churn_rate,
        is_pre_release,
        is_post_release,
        release_amounts,
        release_amounts_aged,
    })
}

/// Rows for every `(vulnerability, file)` pair followed by one snapshot row
/// per component that no vulnerability mentions.
///
/// Vulnerable rows follow the order of `vulns` then of each record's files;
/// snapshot rows are sorted by path. Pairs that cannot be evaluated are
/// reported as exclusions instead of aborting.
pub fn build_metric_table(
    ctx: &ProjectContext<'_>,
    vulns: &[VulnerabilityRecord],
) -> Result<(Vec<MetricRow>, Vec<Exclusion>), MetricsError> {
    if ctx.threshold.is_nan() || ctx.threshold <= 0.0 || ctx.threshold >= 1.0 {
        return Err(MetricsError::InvalidThreshold(ctx.threshold));
    }
    let pairs: Vec<(&VulnerabilityRecord, &str)> = vulns
        .iter()
        .flat_map(|v| v.files.iter().map(move |f| (v, f.as_str())))
        .collect();
    let vulnerable: Vec<Result<MetricRow, Exclusion>> = pairs
        .par_iter()
        .map(|&(v, f)| {
            assemble_metric_row(ctx, f, EventSource::Vulnerability(v)).map_err(|e| Exclusion {
                vulnerability: v.id.clone(),
                component: f.to_owned(),
                reason: e.to_string(),
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(vulnerable.len());
    let mut exclusions = Vec::new();
    for r in vulnerable {
        match r {
            Ok(row) => rows.push(row),
            Err(ex) => {
                warn!("skipping {} for {}: {}", ex.component, ex.vulnerability, ex.reason);
                exclusions.push(ex);
            }
        }
    }

    let mentioned: BTreeSet<&str> = vulns.iter().flat_map(|v| v.files.iter().map(String::as_str)).collect();
    let clean: Vec<&str> = ctx
        .history
        .components()
        .into_iter()
        .filter(|c| !mentioned.contains(c))
        .collect();
    let snapshot: Vec<MetricRow> = clean
        .par_iter()
        .map(|c| assemble_metric_row(ctx, c, EventSource::Snapshot))
        .collect::<Result<_, _>>()?;
    rows.extend(snapshot);
    Ok((rows, exclusions))
}

/// One row for the whole repository at the snapshot: the union of every
/// component ledger, summed classic metrics and the project's full lifetime.
pub fn assemble_repository_row(
    ctx: &ProjectContext<'_>,
    vulns: &[VulnerabilityRecord],
) -> Result<MetricRow, MetricsError> {
    let components = ctx.history.components();
    let mut row = assemble_group_row(ctx, "<repository>", &components, EventSource::Snapshot)?;
    row.is_defective = u8::from(!vulns.is_empty());
    Ok(row)
}

/// Writes rows as CSV with exactly the [`METRIC_COLUMNS`] header.
pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(METRIC_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricRow>, csv::Error> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().collect()
}
