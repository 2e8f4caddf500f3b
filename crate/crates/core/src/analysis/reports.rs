use std::fmt::Write as _;

use serde::Serialize;

use super::{AnalysisError, Frame, CORE_METRICS, SEVERITY_METRICS};
use crate::stats::{correlation, Columnar, Method, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCell {
    pub target: String,
    pub method: Method,
    /// 0 when undefined, with `masked` set.
    pub value: f64,
    pub masked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub metric: String,
    /// Target-major, then method order.
    pub cells: Vec<CorrelationCell>,
}

impl CorrelationRow {
    pub fn get(&self, target: &str, method: Method) -> Option<&CorrelationCell> {
        self.cells.iter().find(|c| c.target == target && c.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub title: String,
    pub targets: Vec<String>,
    pub methods: Vec<Method>,
    /// Rows entering the report.
    pub n: usize,
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationReport {
    pub fn row(&self, metric: &str) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    /// Coefficient of `metric` against `target`; `None` if masked or absent.
    pub fn value(&self, metric: &str, target: &str, method: Method) -> Option<f64> {
        self.row(metric)?.get(target, method).filter(|c| !c.masked).map(|c| c.value)
    }

    /// Aligned plain-text table; masked cells print as `-`.
    pub fn render_text(&self) -> String {
        let headers: Vec<String> = self
            .targets
            .iter()
            .flat_map(|t| self.methods.iter().map(move |m| format!("{t}:{m}")))
            .collect();
        let label_w = self.rows.iter().map(|r| r.metric.len()).max().unwrap_or(0).max("metric".len());
        let col_w = headers.iter().map(String::len).max().unwrap_or(0).max(8);

        let mut out = String::new();
        let _ = writeln!(out, "{} (n = {})", self.title, self.n);
        let _ = write!(out, "{:<label_w$}", "metric");
        for h in &headers {
            let _ = write!(out, "  {h:>col_w$}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<label_w$}", row.metric);
            for c in &row.cells {
                if c.masked {
                    let _ = write!(out, "  {:>col_w$}", "-");
                } else {
                    let _ = write!(out, "  {:>col_w$.4}", c.value);
                }
            }
            out.push('\n');
        }
        out
    }
}

fn build_report(
    title: &str,
    frame: &Frame,
    metrics: &[&str],
    targets: &[&str],
    methods: &[Method],
) -> Result<CorrelationReport, AnalysisError> {
    let n = checked_rows(frame)?;
    let target_cols: Vec<&[f64]> = targets
        .iter()
        .map(|t| frame.get(t).ok_or_else(|| StatsError::UnknownColumn((*t).to_owned())))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        let x = frame.get(metric).ok_or_else(|| StatsError::UnknownColumn(metric.to_owned()))?;
        let mut cells = Vec::with_capacity(targets.len() * methods.len());
        for (target, y) in targets.iter().zip(&target_cols) {
            for &method in methods {
                let r = correlation(method, x, y)?;
                cells.push(CorrelationCell {
                    target: (*target).to_owned(),
                    method,
                    value: r.unwrap_or(0.0),
                    masked: r.is_none(),
                });
            }
        }
        rows.push(CorrelationRow {
            metric: metric.to_owned(),
            cells,
        });
    }
    Ok(CorrelationReport {
        title: title.to_owned(),
        targets: targets.iter().map(|t| (*t).to_owned()).collect(),
        methods: methods.to_vec(),
        n,
        rows,
    })
}

fn require_varying(frame: &Frame, column: &str) -> Result<(), AnalysisError> {
    let col = frame.get(column).ok_or_else(|| StatsError::UnknownColumn(column.to_owned()))?;
    match col.first() {
        Some(&first) if col.iter().any(|&v| v != first) => Ok(()),
        _ => Err(AnalysisError::SingleClass(column.to_owned())),
    }
}

fn checked_rows(frame: &Frame) -> Result<usize, AnalysisError> {
    let n = frame.n_rows();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n }.into());
    }
    Ok(n)
}

/// Each core metric against vulnerability presence.
pub fn direct_correlation_report(frame: &Frame, methods: &[Method]) -> Result<CorrelationReport, AnalysisError> {
    require_varying(frame, "is_defective")?;
    build_report(
        "Correlation with vulnerability presence",
        frame,
        &CORE_METRICS,
        &["is_defective"],
        methods,
    )
}

/// Each core metric against the aged time stage and the pre/post-release
/// flags, over vulnerable rows only.
pub fn staged_correlation_report(frame: &Frame, methods: &[Method]) -> Result<CorrelationReport, AnalysisError> {
    let vulnerable = frame.vulnerable();
    if vulnerable.n_rows() == 0 {
        return Err(AnalysisError::NoVulnerableRows);
    }
    require_varying(&vulnerable, "time_stage_aged_numeric")?;
    build_report(
        "Correlation with time stage and release position",
        &vulnerable,
        &CORE_METRICS,
        &["time_stage_aged_numeric", "is_pre_release", "is_post_release"],
        methods,
    )
}

/// Core and release metrics against severity, over rows that carry a score.
pub fn severity_correlation_report(frame: &Frame, methods: &[Method]) -> Result<CorrelationReport, AnalysisError> {
    let scored = frame.with_severity();
    if scored.n_rows() == 0 {
        return Err(AnalysisError::NoSeverityRows);
    }
    build_report(
        "Correlation with severity",
        &scored,
        &SEVERITY_METRICS,
        &["severity"],
        methods,
    )
}
