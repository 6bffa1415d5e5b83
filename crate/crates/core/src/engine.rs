//! The per-exemplar learning loop and the learning-extent sweep.
//!
//! Each [`DlaEngine::step`] runs, in order:
//!
//! 1. level-1 mismatch of the exemplar against the standards at the current `rho1`;
//! 2. accumulation into the overlap store;
//! 3. winner selection from the cumulative store;
//! 4. the permanence update;
//! 5. when a next exemplar exists and winners were found: per-feature level-2
//!    mismatch, rating update, predictive interpolation, memorization of the
//!    winner vector, and post-prediction retrieval for the current exemplar.
//!
//! Feature columns are processed independently against the shared winner set.

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datasets::QuantizedDataset;
use crate::error::{DlaError, Result};
use crate::inference::{
    compute_th3, extract_memory_with_threshold, predictive_interpolation, MemoryStore,
    PostPredictionResult,
};
use crate::metrics::mapca_from_errors;
use crate::mismatch::{
    check_post_tolerance, first_order_mismatch, mismatch_average, rating_update,
    second_order_mismatch, RatingState,
};
use crate::overlap::{
    select_winners, update_permanence, Activation, OverlapStore, PermanenceRule, PermanenceState,
    StandardsList, WinnerSet, WinnerThreshold,
};

/// Learning extents of the default sweep.
pub const DEFAULT_EXTENTS: [usize; 5] = [50, 100, 150, 200, 250];

#[derive(Debug, Clone, PartialEq)]
pub struct DlaConfig {
    pub learning_extent: usize,
    /// Number of steps during which the permanence rule may fire.
    pub time_limit: u64,
    pub initial_permanence: f64,
    /// Largest overlap for which the permanence rule still fires.
    pub store_threshold: u64,
    /// MAPCA tolerance, in original feature units.
    pub tolerance: f64,
    pub winner_threshold: WinnerThreshold,
    pub rho2: f64,
    pub rho2_lim: f64,
    pub noise_scale: f64,
    pub seed: u64,
    /// Post-prediction match threshold; `None` uses `floor(len / 2)`.
    pub post_threshold: Option<usize>,
    pub activation: Activation,
}

impl Default for DlaConfig {
    fn default() -> Self {
        Self {
            learning_extent: 200,
            time_limit: 70,
            initial_permanence: 0.0,
            store_threshold: 120,
            tolerance: 0.05,
            winner_threshold: WinnerThreshold::default(),
            rho2: 0.0,
            rho2_lim: 1.0,
            noise_scale: 0.01,
            seed: 0,
            post_threshold: None,
            activation: Activation::Tanh,
        }
    }
}

impl DlaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_extent == 0 {
            return Err(DlaError::config("learning_extent", "must be positive"));
        }
        if self.time_limit == 0 {
            return Err(DlaError::config("time_limit", "must be positive"));
        }
        if !(self.initial_permanence >= 0.0 && self.initial_permanence.is_finite()) {
            return Err(DlaError::config(
                "initial_permanence",
                "must be a finite value >= 0",
            ));
        }
        if self.store_threshold == 0 {
            return Err(DlaError::config("store_threshold", "must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(DlaError::config("tolerance", "must be a finite value > 0"));
        }
        if self.winner_threshold == WinnerThreshold::AtLeast(0) {
            return Err(DlaError::config("winner_threshold", "must be >= 1 or auto"));
        }
        if check_post_tolerance(self.rho2, self.rho2_lim).is_err() {
            return Err(DlaError::config(
                "rho2",
                format!(
                    "need 0 <= rho2 <= rho2_lim <= 1, got rho2 = {}, rho2_lim = {}",
                    self.rho2, self.rho2_lim
                ),
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(DlaError::config(
                "noise_scale",
                "must be a finite value >= 0",
            ));
        }
        Ok(())
    }

    pub fn permanence_rule(&self) -> PermanenceRule {
        PermanenceRule {
            time_limit: self.time_limit,
            store_threshold: self.store_threshold,
            noise_scale: self.noise_scale,
            activation: self.activation,
        }
    }
}

/// Compact view of a post-prediction retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PostMatch {
    pub matched: usize,
    pub first_row: Option<usize>,
}

impl From<&PostPredictionResult> for PostMatch {
    fn from(r: &PostPredictionResult) -> Self {
        Self {
            matched: r.len(),
            first_row: r.matched_rows.first().copied(),
        }
    }
}

/// One one-step-ahead prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub timestep: usize,
    pub input: Vec<u32>,
    /// The exemplar being predicted.
    pub target: Vec<u32>,
    /// Selected winner integer per feature.
    pub causal: Vec<u32>,
    /// Interpolated prediction per feature.
    pub predicted: Vec<f64>,
    pub post_match: PostMatch,
    pub k_r: f64,
    pub winner_count: usize,
    pub rho1: f64,
}

/// Complete learner state.
#[derive(Debug, Clone, PartialEq)]
pub struct DlaEngine {
    config: DlaConfig,
    standards: StandardsList,
    store: OverlapStore,
    permanence: PermanenceState,
    winners: WinnerSet,
    memory: Option<MemoryStore>,
    rating: RatingState,
    rng: ChaCha8Rng,
    timestep: usize,
}

impl DlaEngine {
    pub fn init(config: DlaConfig) -> Result<Self> {
        config.validate()?;
        let standards = StandardsList::new(config.learning_extent)?;
        Ok(Self {
            store: OverlapStore::new(standards.len()),
            permanence: PermanenceState::new(config.initial_permanence),
            winners: WinnerSet::default(),
            memory: None,
            rating: RatingState::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            timestep: 0,
            standards,
            config,
        })
    }

    pub fn config(&self) -> &DlaConfig {
        &self.config
    }

    pub fn standards(&self) -> &StandardsList {
        &self.standards
    }

    pub fn store(&self) -> &OverlapStore {
        &self.store
    }

    pub fn permanence(&self) -> &PermanenceState {
        &self.permanence
    }

    pub fn winners(&self) -> &WinnerSet {
        &self.winners
    }

    pub fn memory(&self) -> Option<&MemoryStore> {
        self.memory.as_ref()
    }

    pub fn rating(&self) -> RatingState {
        self.rating
    }

    pub fn timestep(&self) -> usize {
        self.timestep
    }

    fn check_width(&mut self, exemplar: &[u32], next: Option<&[u32]>) -> Result<()> {
        let width = self
            .memory
            .get_or_insert_with(|| MemoryStore::new(exemplar.len()))
            .width();
        for v in std::iter::once(exemplar).chain(next) {
            if v.len() != width {
                return Err(DlaError::LengthMismatch {
                    expected: width,
                    actual: v.len(),
                });
            }
        }
        if width == 0 {
            return Err(DlaError::ZeroDeviantLength);
        }
        Ok(())
    }

    /// Learns from `exemplar` and, given the following exemplar, predicts it.
    ///
    /// Returns `None` when there is no next exemplar or no winner has been
    /// learned yet.
    pub fn step(
        &mut self,
        exemplar: &[u32],
        next_exemplar: Option<&[u32]>,
    ) -> Result<Option<PredictionRecord>> {
        self.check_width(exemplar, next_exemplar)?;
        let timestep = self.timestep;
        self.timestep += 1;

        let matches = first_order_mismatch(exemplar, &self.standards, self.permanence.rho1)?;
        self.store.accumulate(&matches)?;
        self.winners = select_winners(&self.store, &self.standards, self.config.winner_threshold);
        let rule = self.config.permanence_rule();
        update_permanence(
            &mut self.permanence,
            self.store.max_overlap(),
            &rule,
            &mut self.rng,
        );

        let Some(next) = next_exemplar else {
            return Ok(None);
        };
        if self.winners.is_empty() {
            debug!("step {timestep}: no winners yet, skipping prediction");
            return Ok(None);
        }

        let mut causal = Vec::with_capacity(next.len());
        let mut predicted = Vec::with_capacity(next.len());
        let mut avg_total = 0.0;
        for &element in next {
            let k2 = second_order_mismatch(element, &self.winners)?;
            avg_total += mismatch_average(&k2)?;
            let p = predictive_interpolation(&self.winners, &k2, element)?;
            causal.push(p.p_r);
            predicted.push(p.p_r_t);
        }
        self.rating = rating_update(self.rating, avg_total / next.len() as f64);

        let memory = self.memory.as_mut().expect("width checked above");
        memory.memorize(causal.clone())?;
        let th3 = match self.config.post_threshold {
            Some(t) => t,
            None => compute_th3(exemplar.len())?,
        };
        let post = extract_memory_with_threshold(
            memory,
            exemplar,
            self.config.rho2,
            self.config.rho2_lim,
            th3,
        )?;

        Ok(Some(PredictionRecord {
            timestep,
            input: exemplar.to_vec(),
            target: next.to_vec(),
            causal,
            predicted,
            post_match: PostMatch::from(&post),
            k_r: self.rating.rating().unwrap_or(0.0),
            winner_count: self.winners.len(),
            rho1: self.permanence.rho1,
        }))
    }

    /// Post-prediction retrieval for an arbitrary input against the current memory.
    pub fn recall(&self, current: &[u32]) -> Result<PostPredictionResult> {
        let Some(memory) = &self.memory else {
            return Ok(PostPredictionResult::default());
        };
        let th3 = match self.config.post_threshold {
            Some(t) => t,
            None => compute_th3(current.len())?,
        };
        extract_memory_with_threshold(memory, current, self.config.rho2, self.config.rho2_lim, th3)
    }
}

/// Records of a full pass plus the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub records: Vec<PredictionRecord>,
    pub state: DlaEngine,
}

impl FitOutcome {
    /// MAPCA of the interpolated predictions against their targets, with
    /// distances measured in each feature's original units.
    pub fn mapca(&self, dataset: &QuantizedDataset, tol: f64) -> Result<f64> {
        mapca_from_errors(&record_errors(&self.records, dataset)?, tol)
    }

    /// `records x features` grid of interpolated predictions.
    pub fn prediction_matrix(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.predicted.clone()).collect()
    }

    /// Fraction of the dataset cells in `columns` whose value is one of the
    /// final winner integers.
    pub fn coverage(&self, dataset: &QuantizedDataset, columns: &[usize]) -> f64 {
        let mut winner = vec![false; self.state.standards.extent()];
        for &w in self.state.winners.integers() {
            winner[w as usize] = true;
        }
        let mut hits = 0usize;
        let mut total = 0usize;
        for row in &dataset.rows {
            for &c in columns {
                total += 1;
                hits += usize::from(winner.get(row[c] as usize).copied().unwrap_or(false));
            }
        }
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }
}

/// Absolute prediction errors in original units, record-major.
pub fn record_errors(records: &[PredictionRecord], dataset: &QuantizedDataset) -> Result<Vec<f64>> {
    let mut errors = Vec::with_capacity(records.len() * dataset.width());
    for r in records {
        if r.target.len() != dataset.width() {
            return Err(DlaError::LengthMismatch {
                expected: dataset.width(),
                actual: r.target.len(),
            });
        }
        for ((&y, &yhat), map) in r.target.iter().zip(&r.predicted).zip(&dataset.maps) {
            errors.push(map.distance(f64::from(y), yhat));
        }
    }
    Ok(errors)
}

/// One-step-ahead pass over the dataset in row order.
pub fn fit_predict(dataset: &QuantizedDataset, config: &DlaConfig) -> Result<FitOutcome> {
    if dataset.is_empty() {
        return Err(DlaError::EmptyDataset);
    }
    let mut state = DlaEngine::init(config.clone())?;
    let mut records = Vec::with_capacity(dataset.len().saturating_sub(1));
    for (t, exemplar) in dataset.rows.iter().enumerate() {
        let next = dataset.rows.get(t + 1).map(Vec::as_slice);
        if let Some(record) = state.step(exemplar, next)? {
            records.push(record);
        }
    }
    Ok(FitOutcome { records, state })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtentRun {
    pub extent: usize,
    pub outcome: FitOutcome,
}

/// Runs [`fit_predict`] once per learning extent, everything else fixed.
pub fn sweep_learning_extent(
    dataset: &QuantizedDataset,
    base: &DlaConfig,
    extents: &[usize],
) -> Result<Vec<ExtentRun>> {
    if extents.is_empty() {
        return Err(DlaError::config(
            "extents",
            "at least one extent is required",
        ));
    }
    extents
        .iter()
        .map(|&extent| {
            let config = DlaConfig {
                learning_extent: extent,
                ..base.clone()
            };
            Ok(ExtentRun {
                extent,
                outcome: fit_predict(dataset, &config)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> DlaConfig {
        DlaConfig {
            noise_scale: 0.0,
            ..DlaConfig::default()
        }
    }

    #[test]
    fn defaults_match_reference_parameters() {
        let c = DlaConfig::default();
        assert_eq!(c.learning_extent, 200);
        assert_eq!(c.time_limit, 70);
        assert_eq!(c.initial_permanence, 0.0);
        assert_eq!(c.store_threshold, 120);
        assert_eq!(c.tolerance, 0.05);
        let e = DlaEngine::init(c).unwrap();
        assert_eq!(e.standards().len(), 200);
    }

    #[test]
    fn init_builds_standards_and_is_deterministic() {
        let c = DlaConfig {
            learning_extent: 5,
            ..DlaConfig::default()
        };
        let a = DlaEngine::init(c.clone()).unwrap();
        assert_eq!(a.standards().values(), &[0, 1, 2, 3, 4]);
        assert_eq!(a, DlaEngine::init(c).unwrap());
    }

    #[test]
    fn invalid_configs_name_their_field() {
        let cases: Vec<(DlaConfig, &str)> = vec![
            (
                DlaConfig {
                    learning_extent: 0,
                    ..quiet()
                },
                "learning_extent",
            ),
            (
                DlaConfig {
                    time_limit: 0,
                    ..quiet()
                },
                "time_limit",
            ),
            (
                DlaConfig {
                    initial_permanence: -1.0,
                    ..quiet()
                },
                "initial_permanence",
            ),
            (
                DlaConfig {
                    store_threshold: 0,
                    ..quiet()
                },
                "store_threshold",
            ),
            (
                DlaConfig {
                    tolerance: 0.0,
                    ..quiet()
                },
                "tolerance",
            ),
            (
                DlaConfig {
                    rho2: 0.5,
                    rho2_lim: 0.2,
                    ..quiet()
                },
                "rho2",
            ),
            (
                DlaConfig {
                    rho2_lim: 1.5,
                    ..quiet()
                },
                "rho2",
            ),
            (
                DlaConfig {
                    noise_scale: -0.1,
                    ..quiet()
                },
                "noise_scale",
            ),
            (
                DlaConfig {
                    winner_threshold: WinnerThreshold::AtLeast(0),
                    ..quiet()
                },
                "winner_threshold",
            ),
        ];
        for (c, field) in cases {
            match DlaEngine::init(c) {
                Err(DlaError::InvalidConfig { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
    }

    #[test]
    fn first_step_counts_exact_values() {
        let mut e = DlaEngine::init(DlaConfig {
            learning_extent: 10,
            ..quiet()
        })
        .unwrap();
        e.step(&[2, 7], None).unwrap();
        let counts = e.store().counts();
        assert_eq!(counts[2], 1);
        assert_eq!(counts[7], 1);
        assert_eq!(counts.iter().sum::<u64>(), 2);
    }

    #[test]
    fn constant_stream_predicts_itself() {
        let ds = QuantizedDataset::from_rows("c", vec![vec![7]; 20]).unwrap();
        let out = fit_predict(&ds, &quiet()).unwrap();
        assert_eq!(out.records.len(), 19);
        for r in &out.records {
            assert_eq!(r.causal, vec![7]);
            assert_eq!(r.predicted, vec![7.0]);
        }
        assert_eq!(out.mapca(&ds, 0.05).unwrap(), 100.0);
    }

    #[test]
    fn single_exemplar_gives_no_records() {
        let ds = QuantizedDataset::from_rows("one", vec![vec![1, 2, 3]]).unwrap();
        assert!(fit_predict(&ds, &DlaConfig::default())
            .unwrap()
            .records
            .is_empty());
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let ds = QuantizedDataset::from_rows("none", vec![]).unwrap();
        assert!(matches!(
            fit_predict(&ds, &DlaConfig::default()),
            Err(DlaError::EmptyDataset)
        ));
    }

    #[test]
    fn width_changes_are_rejected() {
        let mut e = DlaEngine::init(quiet()).unwrap();
        e.step(&[1, 2], None).unwrap();
        assert!(e.step(&[1, 2, 3], None).is_err());
        assert!(e.step(&[1, 2], Some(&[1])).is_err());
    }

    #[test]
    fn auto_threshold_keeps_only_argmax() {
        let ds =
            QuantizedDataset::from_rows("a", vec![vec![3, 3, 5], vec![3, 4, 6], vec![3, 0, 1]])
                .unwrap();
        let c = DlaConfig {
            winner_threshold: WinnerThreshold::Auto,
            time_limit: 1,
            learning_extent: 10,
            ..quiet()
        };
        let out = fit_predict(&ds, &c).unwrap();
        // the first update widens rho1 before the second exemplar; 3 stays the argmax
        assert!(out.state.winners().contains(3));
        let max = out.state.store().max_overlap();
        assert!(out
            .state
            .winners()
            .source_counts()
            .iter()
            .all(|&c| c == max));
    }

    #[test]
    fn memory_rows_follow_records() {
        let ds =
            QuantizedDataset::from_rows("m", (0..12).map(|i| vec![i % 4, 3]).collect()).unwrap();
        let out = fit_predict(&ds, &quiet()).unwrap();
        let mem = out.state.memory().unwrap();
        assert_eq!(mem.len(), out.records.len());
        assert!(mem.len() < ds.len());
        for (r, row) in out.records.iter().zip(mem.rows()) {
            assert_eq!(&r.causal, row);
        }
    }

    #[test]
    fn sweep_requires_extents() {
        let ds = QuantizedDataset::from_rows("s", vec![vec![1], vec![2]]).unwrap();
        assert!(sweep_learning_extent(&ds, &quiet(), &[]).is_err());
        let runs = sweep_learning_extent(&ds, &quiet(), &[3, 5]).unwrap();
        assert_eq!(
            runs.iter().map(|r| r.extent).collect::<Vec<_>>(),
            vec![3, 5]
        );
    }
}
