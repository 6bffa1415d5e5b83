//! Backward additive deviant computing: extrapolate a feature from the
//! memorized sequence of its past values.
//!
//! The latest chunk `K_n` is treated as the deviant and every earlier chunk as
//! a standard. Their mean absolute deviation (with the trivial `j = n` term
//! included, so the divisor is `n`) is added back onto `K_n`. Because the
//! deviation is absolute, the extrapolation never predicts a decrease.

use crate::error::{DlaError, Result};
use crate::inference::{MemoryStore, PostPredictionResult};

/// Memorized chunks `K_1 ... K_n`, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviantSequence {
    chunks: Vec<f64>,
}

impl DeviantSequence {
    pub fn new(chunks: Vec<f64>) -> Result<Self> {
        if chunks.is_empty() {
            return Err(DlaError::EmptySequence);
        }
        Ok(Self { chunks })
    }

    pub fn chunks(&self) -> &[f64] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn latest(&self) -> f64 {
        self.chunks[self.chunks.len() - 1]
    }
}

/// `K_avg = sum_{j<n} |K_n - K_j| / n`.
pub fn aggregated_deviant(seq: &DeviantSequence) -> f64 {
    let k_n = seq.latest();
    let (previous, _) = seq.chunks.split_at(seq.len() - 1);
    let total: f64 = previous.iter().map(|&k| (k_n - k).abs()).sum();
    total / seq.len() as f64
}

pub fn numeric_prediction(k_avg: f64, k_n: f64) -> f64 {
    k_avg + k_n
}

/// Extrapolates one feature column of the memory store.
pub fn extrapolate(memory: &MemoryStore, column: usize) -> Result<f64> {
    if memory.is_empty() {
        return Err(DlaError::EmptyMemory);
    }
    let chunks = memory.column(column)?.into_iter().map(f64::from).collect();
    let seq = DeviantSequence::new(chunks)?;
    Ok(numeric_prediction(aggregated_deviant(&seq), seq.latest()))
}

/// Combines the extrapolation with the first post-prediction match.
///
/// The two estimates are averaged when a match exists; without one (or when
/// the matched row has no such column) the extrapolation is returned as is.
pub fn memory_field_effect(
    badc_prediction: f64,
    post_match: &PostPredictionResult,
    column: usize,
) -> f64 {
    match post_match.first().and_then(|(_, row)| row.get(column)) {
        Some(&v) => (badc_prediction + f64::from(v)) / 2.0,
        None => badc_prediction,
    }
}
