//! Real absolute deviation (RAD) kernels.
//!
//! Three orders of mismatch are used by the learner:
//!
//! - first order: every input element against every generated standard,
//!   binarized by the permanence tolerance `rho1`;
//! - second order: the next input element against the learned winner
//!   integers, kept as raw distances;
//! - third order: the current input against a memorized row, binarized by
//!   the post-prediction tolerance `rho2`.
//!
//! All inputs are quantized, non-negative integers.

use crate::error::{DlaError, Result};
use crate::overlap::{StandardsList, WinnerSet};

#[inline]
fn abs_diff(a: u32, b: u32) -> u32 {
    a.abs_diff(b)
}

/// Element-wise `|a[j] - b|`.
pub fn rad(a: &[u32], b: u32) -> Vec<u32> {
    a.iter().map(|&x| abs_diff(x, b)).collect()
}

/// Dense `inputs x standards` matrix of binary matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatchMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl BinaryMatchMatrix {
    /// Builds a matrix from row vectors. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(DlaError::RaggedRows {
                    row: i,
                    expected: cols,
                    actual: row.len(),
                });
            }
            cells.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            cells,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    /// Number of 1-cells in each column.
    pub fn column_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.cols];
        for row in self.cells.chunks_exact(self.cols.max(1)) {
            for (count, &hit) in counts.iter_mut().zip(row) {
                *count += u64::from(hit);
            }
        }
        counts
    }

    pub fn ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Level-1 mismatch: cell `(i, l)` is set iff `|input[i] - standards[l]| <= rho1`.
pub fn first_order_mismatch(
    input: &[u32],
    standards: &StandardsList,
    rho1: f64,
) -> Result<BinaryMatchMatrix> {
    if standards.is_empty() {
        return Err(DlaError::NoStandards);
    }
    let cols = standards.len();
    let mut cells = Vec::with_capacity(input.len() * cols);
    for &x in input {
        cells.extend(
            standards
                .values()
                .iter()
                .map(|&s| f64::from(abs_diff(x, s)) <= rho1),
        );
    }
    Ok(BinaryMatchMatrix {
        rows: input.len(),
        cols,
        cells,
    })
}

/// Level-2 mismatch of one next-step element against every winner integer.
pub fn second_order_mismatch(next_input_element: u32, winners: &WinnerSet) -> Result<Vec<u32>> {
    if winners.is_empty() {
        return Err(DlaError::NoWinners);
    }
    Ok(rad(winners.integers(), next_input_element))
}

pub fn mismatch_average(k2: &[u32]) -> Result<f64> {
    if k2.is_empty() {
        return Err(DlaError::EmptyMismatch);
    }
    let sum: u64 = k2.iter().map(|&v| u64::from(v)).sum();
    Ok(sum as f64 / k2.len() as f64)
}

/// Cumulative mean of the per-step level-2 averages.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatingState {
    pub running_sum: f64,
    pub count: u64,
}

impl RatingState {
    pub fn new() -> Self {
        Self::default()
    }

    /// The rating factor `k_r`, or `None` before the first update.
    pub fn rating(&self) -> Option<f64> {
        (self.count > 0).then(|| self.running_sum / self.count as f64)
    }
}

pub fn rating_update(state: RatingState, avg: f64) -> RatingState {
    RatingState {
        running_sum: state.running_sum + avg,
        count: state.count + 1,
    }
}

pub(crate) fn check_post_tolerance(rho2: f64, rho2_lim: f64) -> Result<()> {
    let ok = rho2 >= 0.0 && rho2 <= rho2_lim && (0.0..=1.0).contains(&rho2_lim);
    if ok {
        Ok(())
    } else {
        Err(DlaError::InvalidTolerance { rho2, rho2_lim })
    }
}

/// Level-3 mismatch: element `j` is set iff `|current[j] - memory_row[j]| <= rho2`.
///
/// `rho2` is capped by `rho2_lim`, which itself must lie in `[0, 1]`.
pub fn third_order_mismatch(
    current_input: &[u32],
    memory_row: &[u32],
    rho2: f64,
    rho2_lim: f64,
) -> Result<Vec<bool>> {
    check_post_tolerance(rho2, rho2_lim)?;
    if current_input.len() != memory_row.len() {
        return Err(DlaError::LengthMismatch {
            expected: memory_row.len(),
            actual: current_input.len(),
        });
    }
    Ok(current_input
        .iter()
        .zip(memory_row)
        .map(|(&a, &b)| f64::from(abs_diff(a, b)) <= rho2)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standards(values: &[u32]) -> StandardsList {
        StandardsList::from_values(values.to_vec())
    }

    fn as_rows(m: &BinaryMatchMatrix) -> Vec<Vec<u8>> {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|&b| u8::from(b)).collect())
            .collect()
    }

    #[test]
    fn rad_examples() {
        assert_eq!(rad(&[5], 5), vec![0]);
        assert_eq!(rad(&[3, 9], 5), vec![2, 4]);
        assert_eq!(rad(&[0], 7), vec![7]);
    }

    #[test]
    fn first_order_examples() {
        let s = standards(&[3, 5, 9]);
        let m = first_order_mismatch(&[5], &s, 0.0).unwrap();
        assert_eq!(as_rows(&m), vec![vec![0, 1, 0]]);
        let m = first_order_mismatch(&[5], &s, 2.0).unwrap();
        assert_eq!(as_rows(&m), vec![vec![1, 1, 0]]);
        let m = first_order_mismatch(&[4, 4], &standards(&[4]), 0.0).unwrap();
        assert_eq!(as_rows(&m), vec![vec![1], vec![1]]);
    }

    #[test]
    fn first_order_rejects_empty_standards() {
        let err = first_order_mismatch(&[1], &standards(&[]), 0.0).unwrap_err();
        assert_eq!(err.to_string(), "no generative standards");
    }

    #[test]
    fn second_order_examples() {
        let w = |v: &[u32]| WinnerSet::new(v.to_vec(), vec![1; v.len()]);
        assert_eq!(second_order_mismatch(7, &w(&[5, 9])).unwrap(), vec![2, 2]);
        assert_eq!(second_order_mismatch(7, &w(&[7])).unwrap(), vec![0]);
        assert_eq!(second_order_mismatch(0, &w(&[3])).unwrap(), vec![3]);
        let err = second_order_mismatch(0, &WinnerSet::default()).unwrap_err();
        assert_eq!(err.to_string(), "no winners learned");
    }

    #[test]
    fn average_examples() {
        assert_eq!(mismatch_average(&[2, 2]).unwrap(), 2.0);
        assert_eq!(mismatch_average(&[0, 0, 0]).unwrap(), 0.0);
        assert_eq!(mismatch_average(&[1, 2, 3]).unwrap(), 2.0);
        assert!(mismatch_average(&[]).is_err());
    }

    #[test]
    fn rating_examples() {
        let s = rating_update(RatingState::new(), 2.0);
        assert_eq!(s.rating(), Some(2.0));
        let s = rating_update(
            RatingState {
                running_sum: 4.0,
                count: 2,
            },
            2.0,
        );
        assert_eq!(s.rating(), Some(2.0));
        let mut s = RatingState::new();
        for _ in 0..10 {
            s = rating_update(s, 3.5);
            assert_eq!(s.rating(), Some(3.5));
        }
        assert_eq!(RatingState::new().rating(), None);
    }

    #[test]
    fn third_order_examples() {
        assert_eq!(
            third_order_mismatch(&[5, 6], &[5, 6], 0.0, 1.0).unwrap(),
            vec![true, true]
        );
        assert_eq!(
            third_order_mismatch(&[5, 6], &[5, 9], 0.0, 1.0).unwrap(),
            vec![true, false]
        );
        assert_eq!(
            third_order_mismatch(&[5], &[6], 1.0, 1.0).unwrap(),
            vec![true]
        );
    }

    #[test]
    fn third_order_errors() {
        assert!(matches!(
            third_order_mismatch(&[1, 2], &[1], 0.0, 1.0),
            Err(DlaError::LengthMismatch { .. })
        ));
        assert!(matches!(
            third_order_mismatch(&[1], &[1], 0.0, 1.5),
            Err(DlaError::InvalidTolerance { .. })
        ));
        assert!(matches!(
            third_order_mismatch(&[1], &[1], 0.8, 0.5),
            Err(DlaError::InvalidTolerance { .. })
        ));
        assert!(matches!(
            third_order_mismatch(&[1], &[1], -0.1, 0.5),
            Err(DlaError::InvalidTolerance { .. })
        ));
    }

    #[test]
    fn column_counts_sum_rows() {
        let m = BinaryMatchMatrix::from_rows(&[vec![true, false], vec![true, true]]).unwrap();
        assert_eq!(m.column_counts(), vec![2, 1]);
        assert_eq!(m.ones(), 3);
        assert!(BinaryMatchMatrix::from_rows(&[vec![true], vec![]]).is_err());
    }
}
