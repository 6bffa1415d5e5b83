//! Predictive interpolation, the memorization store and post-prediction
//! retrieval from it.

use crate::error::{DlaError, Result};
use crate::mismatch::{check_post_tolerance, third_order_mismatch};
use crate::overlap::WinnerSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Winner integer with the smallest level-2 mismatch.
    pub p_r: u32,
    /// Midpoint of `p_r` and the input element.
    pub p_r_t: f64,
    pub source_index: usize,
}

/// Picks the winner at the first index attaining `min(k2)` and interpolates
/// halfway toward `input_element`.
pub fn predictive_interpolation(
    winners: &WinnerSet,
    k2: &[u32],
    input_element: u32,
) -> Result<Prediction> {
    if winners.is_empty() || k2.is_empty() {
        return Err(DlaError::NoWinners);
    }
    if winners.len() != k2.len() {
        return Err(DlaError::LengthMismatch {
            expected: winners.len(),
            actual: k2.len(),
        });
    }
    // min_by_key returns the last minimum on ties; fold keeps the first.
    let source_index = k2
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < k2[best] { i } else { best });
    let p_r = winners.integers()[source_index];
    Ok(Prediction {
        p_r,
        p_r_t: (f64::from(p_r) + f64::from(input_element)) / 2.0,
        source_index,
    })
}

/// Memorized prediction vectors, one row per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryStore {
    width: usize,
    rows: Vec<Vec<u32>>,
}

impl MemoryStore {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            rows: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Index the next memorized row will receive.
    pub fn counter(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> Option<&[u32]> {
        self.rows.get(index).map(Vec::as_slice)
    }

    /// Values of one feature over all rows, oldest first.
    pub fn column(&self, column: usize) -> Result<Vec<u32>> {
        if column >= self.width {
            return Err(DlaError::ColumnOutOfRange {
                column,
                width: self.width,
            });
        }
        Ok(self.rows.iter().map(|r| r[column]).collect())
    }

    /// Appends a row and returns its index.
    pub fn memorize(&mut self, prediction_vector: Vec<u32>) -> Result<usize> {
        if prediction_vector.len() != self.width {
            return Err(DlaError::LengthMismatch {
                expected: self.width,
                actual: prediction_vector.len(),
            });
        }
        self.rows.push(prediction_vector);
        Ok(self.rows.len() - 1)
    }
}

/// Popcount of each binary row.
pub fn row_overlap(k3_rows: &[Vec<bool>]) -> Result<Vec<usize>> {
    let width = k3_rows.first().map_or(0, Vec::len);
    k3_rows
        .iter()
        .enumerate()
        .map(|(row, bits)| {
            if bits.len() != width {
                return Err(DlaError::RaggedRows {
                    row,
                    expected: width,
                    actual: bits.len(),
                });
            }
            Ok(bits.iter().filter(|&&b| b).count())
        })
        .collect()
}

/// Post-prediction match threshold, `floor(lo / 2)`.
pub fn compute_th3(lo: usize) -> Result<usize> {
    if lo == 0 {
        return Err(DlaError::ZeroDeviantLength);
    }
    Ok(lo / 2)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostPredictionResult {
    pub matched_rows: Vec<usize>,
    pub matched_vectors: Vec<Vec<u32>>,
}

impl PostPredictionResult {
    pub fn is_empty(&self) -> bool {
        self.matched_rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.matched_rows.len()
    }

    pub fn first(&self) -> Option<(usize, &[u32])> {
        self.matched_rows
            .first()
            .map(|&i| (i, self.matched_vectors[0].as_slice()))
    }
}

/// Rows of `store` whose level-3 match count against `current_input` reaches
/// `floor(len / 2)`, in ascending row order.
pub fn extract_memory(
    store: &MemoryStore,
    current_input: &[u32],
    rho2: f64,
    rho2_lim: f64,
) -> Result<PostPredictionResult> {
    let th3 = compute_th3(current_input.len())?;
    extract_memory_with_threshold(store, current_input, rho2, rho2_lim, th3)
}

/// [`extract_memory`] with an explicit match threshold.
pub fn extract_memory_with_threshold(
    store: &MemoryStore,
    current_input: &[u32],
    rho2: f64,
    rho2_lim: f64,
    th3: usize,
) -> Result<PostPredictionResult> {
    check_post_tolerance(rho2, rho2_lim)?;
    let mut result = PostPredictionResult::default();
    if store.is_empty() {
        return Ok(result);
    }
    let k3: Vec<Vec<bool>> = store
        .rows()
        .iter()
        .map(|row| third_order_mismatch(current_input, row, rho2, rho2_lim))
        .collect::<Result<_>>()?;
    for (index, overlap) in row_overlap(&k3)?.into_iter().enumerate() {
        if overlap >= th3 {
            result.matched_rows.push(index);
            result.matched_vectors.push(store.rows()[index].clone());
        }
    }
    Ok(result)
}
