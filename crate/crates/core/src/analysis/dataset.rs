use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::metrics::MetricRow;

/// How a ratio setting maps to the number of non-vulnerable rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioReading {
    /// `ratio` is vulnerable:non-vulnerable, so 0.1 means ten clean rows per vulnerable row.
    #[default]
    VulnerableFraction,
    /// `ratio` is non-vulnerable:vulnerable, so 0.1 means one clean row per ten vulnerable rows.
    NonVulnerableFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub ratio: f64,
    pub seed: u64,
    pub reading: RatioReading,
}

impl DatasetSpec {
    pub fn balanced(seed: u64) -> Self {
        DatasetSpec {
            ratio: 1.0,
            seed,
            reading: RatioReading::VulnerableFraction,
        }
    }
}

/// Number of non-vulnerable rows that pairs with `n_vulnerable` at `ratio`.
pub fn nonvulnerable_count(n_vulnerable: usize, ratio: f64, reading: RatioReading) -> Result<usize, AnalysisError> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(AnalysisError::InvalidRatio(ratio));
    }
    let n = n_vulnerable as f64;
    Ok(match reading {
        RatioReading::VulnerableFraction => (n / ratio).round(),
        RatioReading::NonVulnerableFraction => (n * ratio).round(),
    } as usize)
}

/// Splits rows into `(vulnerable, non_vulnerable)` preserving order.
pub fn split_by_class(rows: &[MetricRow]) -> (Vec<MetricRow>, Vec<MetricRow>) {
    rows.iter().cloned().partition(|r| r.is_defective == 1)
}

/// Samples `count` pool rows without replacement, kept in pool order.
pub(crate) fn sample_pool(pool: &[MetricRow], count: usize, seed: u64) -> Result<Vec<MetricRow>, AnalysisError> {
    if count > pool.len() {
        return Err(AnalysisError::PoolTooSmall {
            requested: count,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, pool.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i].clone()).collect())
}

/// All vulnerable rows followed by a seeded sample of the non-vulnerable pool
/// sized to the requested ratio.
pub fn build_dataset(
    vulnerable: &[MetricRow],
    pool: &[MetricRow],
    spec: &DatasetSpec,
) -> Result<Vec<MetricRow>, AnalysisError> {
    if spec.reading == RatioReading::VulnerableFraction && spec.ratio > 1.0 {
        return Err(AnalysisError::InvalidRatio(spec.ratio));
    }
    let count = nonvulnerable_count(vulnerable.len(), spec.ratio, spec.reading)?;
    let mut rows = vulnerable.to_vec();
    rows.extend(sample_pool(pool, count, spec.seed)?);
    Ok(rows)
}
