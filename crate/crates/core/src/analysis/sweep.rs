//! Distortion checks: how much the correlation matrix moves when the class
//! ratio, the minor-contributor threshold or the unit of analysis changes.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::sample_pool;
use super::{nonvulnerable_count, split_by_class, AnalysisError, Corpus, Frame, RatioReading, CORE_METRICS};
use crate::ingest::VulnerabilityRecord;
use crate::metrics::{assemble_group_row, EventSource, MetricRow, DEFAULT_MINOR_THRESHOLD};
use crate::stats::{
    correlation_matrix, correlation_to_distance, cosine_similarity, expdecay_similarity, frobenius_distance,
    ks_two_sample, mantel, minmax_similarity, Alternative, CorrelationMatrix, MantelResult, Method, Permutations,
    StatsError,
};

pub const RATIO_SETTINGS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const THRESHOLD_SETTINGS: [f64; 4] = [0.05, 0.10, 0.20, 0.50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Ratio,
    Threshold,
    Locality,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Ratio => "ratio",
            SweepAxis::Threshold => "threshold",
            SweepAxis::Locality => "locality",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ratio" => Ok(SweepAxis::Ratio),
            "threshold" => Ok(SweepAxis::Threshold),
            "locality" => Ok(SweepAxis::Locality),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

/// Which setting pairs are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// Every unordered pair of settings.
    #[default]
    All,
    /// Neighbouring settings only.
    Consecutive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    /// Decay rate of the exponential similarity.
    pub lambda: f64,
    pub permutations: usize,
    /// Overrides the per-axis default tail of the Mantel test.
    pub mantel_alternative: Option<Alternative>,
    pub pair_mode: PairMode,
    pub method: Method,
    pub reading: RatioReading,
    /// Class ratio of the dataset behind the threshold sweep.
    pub ratio: f64,
    /// Minor threshold for the ratio sweep inputs and the locality check.
    pub threshold: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 42,
            lambda: 1.0,
            permutations: 999,
            mantel_alternative: None,
            pair_mode: PairMode::All,
            method: Method::Pearson,
            reading: RatioReading::VulnerableFraction,
            ratio: 1.0,
            threshold: DEFAULT_MINOR_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub setting: f64,
    pub n_rows: usize,
    pub matrix: CorrelationMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStats {
    pub a: f64,
    pub b: f64,
    pub frobenius: f64,
    pub minmax: f64,
    pub expdecay: f64,
    pub cosine: f64,
    pub ks_d: f64,
    pub ks_p: f64,
    /// Absent when either distance matrix is constant.
    pub mantel_r: Option<f64>,
    pub mantel_p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mean_frobenius: f64,
    pub mean_minmax: f64,
    pub mean_expdecay: f64,
    pub mean_cosine: f64,
    pub mean_ks_p: f64,
    pub mean_mantel_r: Option<f64>,
    pub mean_mantel_p: Option<f64>,
    /// All Frobenius distances were equal, so every min-max score is 1.
    pub minmax_degenerate: bool,
    /// Setting with the highest mean cosine similarity to the others.
    pub best_setting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub method: Method,
    pub mantel_alternative: Alternative,
    pub points: Vec<SweepPoint>,
    pub pairwise: Vec<PairStats>,
    pub summary: SweepSummary,
}

fn matrix_of(rows: &[MetricRow], method: Method) -> Result<CorrelationMatrix, StatsError> {
    correlation_matrix(&Frame::from_rows(rows), &CORE_METRICS, method)
}

fn pair_indices(n: usize, mode: PairMode) -> Vec<(usize, usize)> {
    match mode {
        PairMode::All => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        PairMode::Consecutive => (1..n).map(|i| (i - 1, i)).collect(),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn compare(
    axis: SweepAxis,
    points: Vec<SweepPoint>,
    cfg: &SweepConfig,
    alternative: Alternative,
) -> Result<SweepReport, AnalysisError> {
    let pairs = pair_indices(points.len(), cfg.pair_mode);
    if pairs.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 2, got: points.len() }.into());
    }

    struct Raw {
        frobenius: f64,
        expdecay: f64,
        cosine: f64,
        ks_d: f64,
        ks_p: f64,
        mantel: Option<MantelResult>,
    }
    let raw: Vec<Raw> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let (a, b) = (&points[i].matrix, &points[j].matrix);
            let frobenius = frobenius_distance(a, b)?;
            let ks = ks_two_sample(&a.flatten(), &b.flatten())?;
            let perms = Permutations::Random {
                count: cfg.permutations,
                seed: cfg.seed.wrapping_add(k as u64),
            };
            let mantel = match mantel(&correlation_to_distance(a), &correlation_to_distance(b), perms, alternative) {
                Ok(m) => Some(m),
                Err(StatsError::Undefined) => None,
                Err(e) => return Err(e),
            };
            Ok(Raw {
                frobenius,
                expdecay: expdecay_similarity(frobenius, cfg.lambda)?,
                cosine: cosine_similarity(a, b)?,
                ks_d: ks.d,
                ks_p: ks.p,
                mantel,
            })
        })
        .collect::<Result<_, StatsError>>()?;

    let distances: Vec<f64> = raw.iter().map(|r| r.frobenius).collect();
    let minmax = minmax_similarity(&distances)?;
    let pairwise: Vec<PairStats> = pairs
        .iter()
        .zip(&raw)
        .zip(&minmax.scores)
        .map(|((&(i, j), r), &mm)| PairStats {
            a: points[i].setting,
            b: points[j].setting,
            frobenius: r.frobenius,
            minmax: mm,
            expdecay: r.expdecay,
            cosine: r.cosine,
            ks_d: r.ks_d,
            ks_p: r.ks_p,
            mantel_r: r.mantel.map(|m| m.r),
            mantel_p: r.mantel.map(|m| m.p),
        })
        .collect();

    let mantel_mean = |f: fn(&PairStats) -> Option<f64>| {
        let vals: Vec<f64> = pairwise.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| mean(vals.into_iter()))
    };
    // Ties keep the earliest setting.
    let mut best = (points[0].setting, f64::NEG_INFINITY);
    for p in &points {
        let touching = pairwise.iter().filter(|s| s.a == p.setting || s.b == p.setting);
        let score = mean(touching.map(|s| s.cosine));
        if score > best.1 {
            best = (p.setting, score);
        }
    }
    let summary = SweepSummary {
        mean_frobenius: mean(pairwise.iter().map(|p| p.frobenius)),
        mean_minmax: mean(pairwise.iter().map(|p| p.minmax)),
        mean_expdecay: mean(pairwise.iter().map(|p| p.expdecay)),
        mean_cosine: mean(pairwise.iter().map(|p| p.cosine)),
        mean_ks_p: mean(pairwise.iter().map(|p| p.ks_p)),
        mean_mantel_r: mantel_mean(|p| p.mantel_r),
        mean_mantel_p: mantel_mean(|p| p.mantel_p),
        minmax_degenerate: minmax.degenerate,
        best_setting: best.0,
    };
    Ok(SweepReport {
        axis,
        method: cfg.method,
        mantel_alternative: alternative,
        points,
        pairwise,
        summary,
    })
}

/// Non-vulnerable sample size per ratio setting. When the largest request
/// exceeds the pool, every request shrinks by the same factor.
fn ratio_counts(n_vulnerable: usize, pool: usize, cfg: &SweepConfig) -> Result<Vec<usize>, AnalysisError> {
    let counts: Vec<usize> = RATIO_SETTINGS
        .iter()
        .map(|&r| nonvulnerable_count(n_vulnerable, r, cfg.reading))
        .collect::<Result<_, _>>()?;
    let max = counts.iter().copied().max().unwrap_or(0);
    if max <= pool {
        return Ok(counts);
    }
    let scale = pool as f64 / max as f64;
    warn!("pool of {pool} rows cannot supply {max}; scaling every ratio by {scale:.4}");
    Ok(counts.iter().map(|&c| ((c as f64 * scale).round() as usize).min(pool)).collect())
}

/// One correlation matrix per class ratio, all sharing the vulnerable rows.
///
/// Point `i` samples the pool with seed `seed + i`. The Mantel test defaults
/// to the lower tail: stable matrices score p near 1.
pub fn ratio_sweep(vulnerable: &[MetricRow], pool: &[MetricRow], cfg: &SweepConfig) -> Result<SweepReport, AnalysisError> {
    if vulnerable.is_empty() {
        return Err(AnalysisError::NoVulnerableRows);
    }
    let counts = ratio_counts(vulnerable.len(), pool.len(), cfg)?;
    let points: Vec<SweepPoint> = RATIO_SETTINGS
        .par_iter()
        .zip(counts.par_iter())
        .enumerate()
        .map(|(i, (&setting, &count))| {
            let mut rows = vulnerable.to_vec();
            rows.extend(sample_pool(pool, count, cfg.seed.wrapping_add(i as u64))?);
            Ok(SweepPoint {
                setting,
                n_rows: rows.len(),
                matrix: matrix_of(&rows, cfg.method)?,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    compare(SweepAxis::Ratio, points, cfg, cfg.mantel_alternative.unwrap_or(Alternative::Less))
}

/// One correlation matrix per minor threshold.
///
/// The dataset is drawn once with `cfg.ratio` and `cfg.seed`; the component
/// set does not depend on the threshold, so every point sees the same rows.
pub fn threshold_sweep(corpus: &Corpus, cfg: &SweepConfig) -> Result<SweepReport, AnalysisError> {
    let points: Vec<SweepPoint> = THRESHOLD_SETTINGS
        .par_iter()
        .map(|&threshold| {
            let (rows, _) = corpus.metric_table(threshold)?;
            let (vulnerable, pool) = split_by_class(&rows);
            if vulnerable.is_empty() {
                return Err(AnalysisError::NoVulnerableRows);
            }
            let count = nonvulnerable_count(vulnerable.len(), cfg.ratio, cfg.reading)?;
            let mut data = vulnerable;
            data.extend(sample_pool(&pool, count, cfg.seed)?);
            Ok(SweepPoint {
                setting: threshold,
                n_rows: data.len(),
                matrix: matrix_of(&data, cfg.method)?,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    compare(SweepAxis::Threshold, points, cfg, cfg.mantel_alternative.unwrap_or(Alternative::Greater))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub key: String,
    pub members: Vec<String>,
    pub vulnerabilities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub method: Method,
    pub n_file_rows: usize,
    pub n_group_rows: usize,
    pub groups: Vec<GroupSummary>,
    pub file_matrix: CorrelationMatrix,
    pub group_matrix: CorrelationMatrix,
    pub mantel: MantelResult,
}

struct Group<'a> {
    key: &'a str,
    records: Vec<&'a VulnerabilityRecord>,
    members: Vec<&'a str>,
}

fn group_records(vulns: &[VulnerabilityRecord]) -> Vec<Group<'_>> {
    let mut groups: Vec<Group<'_>> = Vec::new();
    for v in vulns {
        let idx = match groups.iter().position(|g| g.key == v.group_key) {
            Some(i) => i,
            None => {
                groups.push(Group {
                    key: &v.group_key,
                    records: Vec::new(),
                    members: Vec::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[idx];
        g.records.push(v);
        for f in &v.files {
            if !g.members.contains(&f.as_str()) {
                g.members.push(f);
            }
        }
    }
    groups
}

/// Compares the file-level matrix over vulnerable rows with the matrix over
/// rows that aggregate each `group_key`.
///
/// A group is evaluated at its earliest publication and carries its highest
/// severity. Groups appear in first-appearance order, so singleton groups
/// reproduce the file-level rows exactly.
pub fn locality_check(corpus: &Corpus, cfg: &SweepConfig) -> Result<LocalityReport, AnalysisError> {
    let ctx = corpus.context(cfg.threshold);
    let (rows, _) = corpus.metric_table(cfg.threshold)?;
    let (file_rows, _) = split_by_class(&rows);
    if file_rows.is_empty() {
        return Err(AnalysisError::NoVulnerableRows);
    }

    let groups = group_records(&corpus.vulns);
    let assembled: Vec<Option<MetricRow>> = groups
        .par_iter()
        .map(|g| {
            let earliest = g
                .records
                .iter()
                .min_by_key(|v| v.published)
                .expect("groups hold at least one record");
            match assemble_group_row(&ctx, g.key, &g.members, EventSource::Vulnerability(earliest)) {
                Ok(mut row) => {
                    row.severity = g.records.iter().filter_map(|v| v.severity).reduce(f64::max);
                    Some(row)
                }
                Err(e) => {
                    warn!("skipping group {}: {e}", g.key);
                    None
                }
            }
        })
        .collect();
    let group_rows: Vec<MetricRow> = assembled.into_iter().flatten().collect();
    if group_rows.len() < 2 {
        return Err(AnalysisError::SingleGroup(group_rows.len()));
    }

    let file_matrix = matrix_of(&file_rows, cfg.method)?;
    let group_matrix = matrix_of(&group_rows, cfg.method)?;
    let alternative = cfg.mantel_alternative.unwrap_or(Alternative::Greater);
    let mantel = mantel(
        &correlation_to_distance(&file_matrix),
        &correlation_to_distance(&group_matrix),
        Permutations::Random {
            count: cfg.permutations,
            seed: cfg.seed,
        },
        alternative,
    )?;
    Ok(LocalityReport {
        method: cfg.method,
        n_file_rows: file_rows.len(),
        n_group_rows: group_rows.len(),
        groups: groups
            .iter()
            .map(|g| GroupSummary {
                key: g.key.to_owned(),
                members: g.members.iter().map(|m| (*m).to_owned()).collect(),
                vulnerabilities: g.records.iter().map(|v| v.id.clone()).collect(),
            })
            .collect(),
        file_matrix,
        group_matrix,
        mantel,
    })
}
