//! Distances and similarity scores between correlation matrices.

use log::warn;
use serde::Serialize;

use super::{check_finite, CorrelationMatrix, StatsError};

fn same_shape(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<(), StatsError> {
    if a.labels != b.labels {
        return Err(StatsError::ShapeMismatch(format!(
            "labels {:?} vs {:?}",
            a.labels, b.labels
        )));
    }
    Ok(())
}

/// Square root of the summed squared entry differences.
pub fn frobenius_distance(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64, StatsError> {
    same_shape(a, b)?;
    let sum: f64 = a
        .flatten()
        .iter()
        .zip(b.flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinMaxSimilarity {
    pub scores: Vec<f64>,
    /// All distances were equal; every score is defined as 1.
    pub degenerate: bool,
}

/// Maps each distance `d` to `1 - (d - min) / (max - min)`.
pub fn minmax_similarity(distances: &[f64]) -> Result<MinMaxSimilarity, StatsError> {
    if distances.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    check_finite(distances)?;
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        warn!("all {} distances equal {min}; min-max similarity degenerates to 1", distances.len());
        return Ok(MinMaxSimilarity {
            scores: vec![1.0; distances.len()],
            degenerate: true,
        });
    }
    Ok(MinMaxSimilarity {
        scores: distances.iter().map(|d| 1.0 - (d - min) / (max - min)).collect(),
        degenerate: false,
    })
}

/// `exp(-lambda * d)`.
pub fn expdecay_similarity(d: f64, lambda: f64) -> Result<f64, StatsError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(StatsError::InvalidLambda(lambda));
    }
    if !(d >= 0.0) {
        return Err(StatsError::NegativeDistance(d));
    }
    Ok((-lambda * d).exp())
}

/// Cosine of the angle between the row-major flattened matrices.
pub fn cosine_similarity(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64, StatsError> {
    same_shape(a, b)?;
    let (fa, fb) = (a.flatten(), b.flatten());
    let dot: f64 = fa.iter().zip(&fb).map(|(x, y)| x * y).sum();
    let na = fa.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = fb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(StatsError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
