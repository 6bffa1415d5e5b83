//! Deviant learning over sparse mismatch representations.
//!
//! Inputs are quantized onto non-negative integers and compared against a
//! long list of generated integer standards by real absolute deviation. The
//! standards that keep matching accumulate in an overlap store, win by
//! inhibition, and the next input is predicted from them. A memory of those
//! predictions supports post-hoc retrieval and additive extrapolation.
//!
//! - [`mismatch`]: the three orders of RAD mismatch and the rating factor
//! - [`overlap`]: standards, overlap store, winner selection, permanence rule
//! - [`inference`]: predictive interpolation, memory store, prefix-ordered retrieval
//! - [`badc`]: backward additive extrapolation and the memory field effect
//! - [`engine`]: the learning loop, full passes and the learning-extent sweep
//! - [`datasets`] / [`metrics`]: CSV ingestion, quantization and MAPCA
//! - [`htm`]: a Monte-Carlo spatial-pooler baseline

pub mod badc;
pub mod datasets;
pub mod engine;
pub mod error;
pub mod htm;
pub mod inference;
pub mod metrics;
pub mod mismatch;
pub mod overlap;

pub use datasets::{
    load_csv, quantize, Benchmark, ColumnMap, ColumnQuant, CsvSchema, QuantSpec, QuantizedDataset,
    RawDataset,
};
pub use engine::{
    fit_predict, sweep_learning_extent, DlaConfig, DlaEngine, ExtentRun, FitOutcome, PostMatch,
    PredictionRecord, DEFAULT_EXTENTS,
};
pub use error::{DlaError, Result};
pub use htm::{htm_fit_predict, HtmOutcome, HtmParams};
pub use metrics::mapca;
pub use overlap::{Activation, WinnerThreshold};
