//! Mean absolute percentage classification accuracy (MAPCA).

use crate::error::{DlaError, Result};

/// Percentage of positions with `|y - yhat| < tol`.
///
/// The comparison is strict, so `tol = 0` scores 0% even on exact matches.
pub fn mapca(y: &[f64], yhat: &[f64], tol: f64) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(DlaError::LengthMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    let errors: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).collect();
    mapca_from_errors(&errors, tol)
}

/// MAPCA over precomputed absolute errors.
pub fn mapca_from_errors(errors: &[f64], tol: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(DlaError::EmptyDataset);
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(DlaError::config("tolerance", format!("{tol} is not >= 0")));
    }
    let hits = errors.iter().filter(|&&e| e < tol).count();
    Ok(100.0 * hits as f64 / errors.len() as f64)
}
