//! Deviant overlap store, winner-integer inhibition and the permanence rule.

use std::fmt;

use rand::Rng;

use crate::error::{DlaError, Result};
use crate::mismatch::BinaryMatchMatrix;

/// The generated standards `0, 1, ..., learning_extent - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardsList {
    values: Vec<u32>,
}

impl StandardsList {
    pub fn new(learning_extent: usize) -> Result<Self> {
        if learning_extent == 0 {
            return Err(DlaError::config("learning_extent", "must be positive"));
        }
        let top = u32::try_from(learning_extent)
            .map_err(|_| DlaError::config("learning_extent", "exceeds u32 range"))?;
        Ok(Self {
            values: (0..top).collect(),
        })
    }

    /// Arbitrary standards, used by kernel tests. Production code uses [`StandardsList::new`].
    pub fn from_values(values: Vec<u32>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The learning extent, i.e. the number of standards.
    pub fn extent(&self) -> usize {
        self.values.len()
    }
}

/// Per-standard match counts accumulated across exemplars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapStore {
    counts: Vec<u64>,
    exemplars_seen: u64,
}

impl OverlapStore {
    pub fn new(learning_extent: usize) -> Self {
        Self {
            counts: vec![0; learning_extent],
            exemplars_seen: 0,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn exemplars_seen(&self) -> u64 {
        self.exemplars_seen
    }

    /// Adds the column sums of `matches` to the store and counts one exemplar.
    pub fn accumulate(&mut self, matches: &BinaryMatchMatrix) -> Result<()> {
        if matches.cols() != self.counts.len() {
            return Err(DlaError::DimensionMismatch {
                expected: self.counts.len(),
                actual: matches.cols(),
            });
        }
        for (count, add) in self.counts.iter_mut().zip(matches.column_counts()) {
            *count += add;
        }
        self.exemplars_seen += 1;
        Ok(())
    }

    /// Largest count over all standards, 0 for an empty history.
    pub fn max_overlap(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Number of standards that have matched at least once.
    pub fn nonzero(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

pub fn accumulate_overlap(
    mut store: OverlapStore,
    matches: &BinaryMatchMatrix,
) -> Result<OverlapStore> {
    store.accumulate(matches)?;
    Ok(store)
}

pub fn max_overlap(store: &OverlapStore) -> u64 {
    store.max_overlap()
}

/// Count threshold a standard must reach to become a winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WinnerThreshold {
    /// Threshold equals the current maximum count, keeping only the argmax set.
    Auto,
    AtLeast(u64),
}

impl Default for WinnerThreshold {
    fn default() -> Self {
        WinnerThreshold::AtLeast(1)
    }
}

impl fmt::Display for WinnerThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WinnerThreshold::Auto => f.write_str("auto"),
            WinnerThreshold::AtLeast(n) => write!(f, "{n}"),
        }
    }
}

/// Winner integers with the overlap counts that selected them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WinnerSet {
    integers: Vec<u32>,
    source_counts: Vec<u64>,
}

impl WinnerSet {
    pub fn new(integers: Vec<u32>, source_counts: Vec<u64>) -> Self {
        debug_assert_eq!(integers.len(), source_counts.len());
        Self {
            integers,
            source_counts,
        }
    }

    pub fn integers(&self) -> &[u32] {
        &self.integers
    }

    pub fn source_counts(&self) -> &[u64] {
        &self.source_counts
    }

    pub fn len(&self) -> usize {
        self.integers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.integers.is_empty()
    }

    pub fn contains(&self, value: u32) -> bool {
        self.integers.contains(&value)
    }
}

/// Selects every standard whose count reaches the threshold.
///
/// Counts of zero never win, so an empty history yields an empty set under
/// either threshold kind.
pub fn select_winners(
    store: &OverlapStore,
    standards: &StandardsList,
    threshold: WinnerThreshold,
) -> WinnerSet {
    let floor = match threshold {
        WinnerThreshold::Auto => store.max_overlap(),
        WinnerThreshold::AtLeast(n) => n,
    }
    .max(1);
    let (integers, source_counts) = standards
        .values()
        .iter()
        .zip(store.counts())
        .filter(|(_, &c)| c >= floor)
        .map(|(&v, &c)| (v, c))
        .unzip();
    WinnerSet {
        integers,
        source_counts,
    }
}

/// Squashing function applied to the largest overlap in the permanence rule.
#[derive(Clone, Copy, Default)]
pub enum Activation {
    #[default]
    Tanh,
    /// Any bounded, odd, increasing function.
    Custom(fn(f64) -> f64),
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => activation_sigma(x),
            Activation::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => f.write_str("Tanh"),
            Activation::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Activation::Tanh, Activation::Tanh) => true,
            (Activation::Custom(a), Activation::Custom(b)) => std::ptr::fn_addr_eq(*a, *b),
            _ => false,
        }
    }
}

pub fn activation_sigma(x: f64) -> f64 {
    x.tanh()
}

/// Level-1 tolerance and the learning clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermanenceState {
    pub rho1: f64,
    /// Total increment applied by the most recent update.
    pub rho_o: f64,
    pub t_i: u64,
}

impl PermanenceState {
    pub fn new(rho1: f64) -> Self {
        Self {
            rho1,
            rho_o: 0.0,
            t_i: 0,
        }
    }
}

/// Gate and noise settings for [`update_permanence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermanenceRule {
    pub time_limit: u64,
    pub store_threshold: u64,
    pub noise_scale: f64,
    pub activation: Activation,
}

/// Number of Monte-Carlo passes of the increment per update.
pub const PERMANENCE_PASSES: usize = 2;

/// Hebbian-style growth of `rho1`.
///
/// While `t_i < time_limit` and `s_o_max <= store_threshold`, each of the
/// two passes adds `activation(s_o_max) + eps` with `eps ~ U[0, noise_scale]`.
/// A closed gate leaves `rho1` alone. The clock advances on every call.
pub fn update_permanence<R: Rng + ?Sized>(
    state: &mut PermanenceState,
    s_o_max: u64,
    rule: &PermanenceRule,
    rng: &mut R,
) {
    let open = state.t_i < rule.time_limit && s_o_max <= rule.store_threshold;
    let mut applied = 0.0;
    if open {
        let drive = rule.activation.apply(s_o_max as f64);
        for _ in 0..PERMANENCE_PASSES {
            let eps = if rule.noise_scale > 0.0 {
                rng.random_range(0.0..=rule.noise_scale)
            } else {
                0.0
            };
            applied += drive + eps;
        }
        state.rho1 += applied;
    }
    state.rho_o = applied;
    state.t_i += 1;
}
