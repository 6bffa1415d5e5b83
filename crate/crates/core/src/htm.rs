//! Simplified HTM spatial-pooler baseline.
//!
//! Inputs are scalar-encoded into a concatenated binary vector. Each column
//! owns a random set of potential synapses with permanences in `[0, 1]`. On
//! every Monte-Carlo run a synapse conducts with probability equal to its
//! permanence; columns whose conducting overlap reaches `minimum_overlap`
//! compete inside fixed column neighborhoods and the top
//! `desired_local_activity` win. The active set is the per-neighborhood top
//! of the win counts accumulated over all runs.
//!
//! Prediction is first-order: the successor of the most similar earlier SDR
//! (dot-product overlap, most recent on ties) is decoded back to bucket values.
//!
//! Neighborhoods are contiguous column groups, unrelated to input topology.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::datasets::{Benchmark, QuantizedDataset};
use crate::error::{DlaError, Result};
use crate::metrics::mapca_from_errors;

/// Permanences are stored in hundredths.
const PERMANENCE_SCALE: f64 = 100.0;
const PERMANENCE_MAX: u8 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct HtmParams {
    pub desired_local_activity: usize,
    /// Conducting-synapse overlap a column needs to compete.
    pub minimum_overlap: u32,
    pub initial_permanence: f64,
    pub mc_runs: usize,
    pub tolerance: f64,
    pub columns: usize,
    /// Columns per inhibition neighborhood; `columns` or more means global.
    pub neighborhood_size: usize,
    pub potential_fraction: f64,
    pub connected_threshold: f64,
    pub permanence_increment: f64,
    pub permanence_decrement: f64,
    /// Active bits of each feature's scalar encoding.
    pub active_bits: usize,
    pub seed: u64,
}

impl Default for HtmParams {
    fn default() -> Self {
        Self {
            desired_local_activity: 3,
            minimum_overlap: 90,
            initial_permanence: 0.4,
            mc_runs: 1000,
            tolerance: 0.05,
            columns: 128,
            neighborhood_size: 128,
            potential_fraction: 0.8,
            connected_threshold: 0.5,
            permanence_increment: 0.05,
            permanence_decrement: 0.05,
            active_bits: 64,
            seed: 0,
        }
    }
}

impl HtmParams {
    /// Reference parameters for a benchmark. Encoder widths are chosen so the
    /// expected conducting overlap of a typical column exceeds the minimum.
    pub fn for_benchmark(benchmark: Benchmark) -> Self {
        let (minimum_overlap, active_bits) = match benchmark {
            Benchmark::Iris => (90, 64),
            Benchmark::Heart => (210, 64),
            Benchmark::WordSim => (123, 256),
        };
        Self {
            minimum_overlap,
            active_bits,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.desired_local_activity == 0 {
            return Err(DlaError::config(
                "htm_desired_local_activity",
                "must be positive",
            ));
        }
        if self.minimum_overlap == 0 {
            return Err(DlaError::config("htm_minimum_overlap", "must be positive"));
        }
        if !unit(self.initial_permanence) {
            return Err(DlaError::config(
                "htm_initial_permanence",
                "must lie in [0, 1]",
            ));
        }
        if self.mc_runs == 0 {
            return Err(DlaError::config("htm_mc_runs", "must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(DlaError::config(
                "htm_tolerance",
                "must be a finite value > 0",
            ));
        }
        if self.columns == 0 {
            return Err(DlaError::config("htm_columns", "must be positive"));
        }
        if self.neighborhood_size == 0 {
            return Err(DlaError::config(
                "htm_neighborhood_size",
                "must be positive",
            ));
        }
        if !unit(self.potential_fraction) {
            return Err(DlaError::config(
                "htm_potential_fraction",
                "must lie in [0, 1]",
            ));
        }
        if !unit(self.connected_threshold) {
            return Err(DlaError::config(
                "htm_connected_threshold",
                "must lie in [0, 1]",
            ));
        }
        if !unit(self.permanence_increment) {
            return Err(DlaError::config(
                "htm_permanence_increment",
                "must lie in [0, 1]",
            ));
        }
        if !unit(self.permanence_decrement) {
            return Err(DlaError::config(
                "htm_permanence_decrement",
                "must lie in [0, 1]",
            ));
        }
        if self.active_bits == 0 {
            return Err(DlaError::config("htm_active_bits", "must be positive"));
        }
        Ok(())
    }
}

fn to_units(p: f64) -> u8 {
    (p * PERMANENCE_SCALE).round().clamp(0.0, PERMANENCE_SCALE) as u8
}

/// Contiguous-block scalar encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEncoder {
    pub min: f64,
    pub max: f64,
    pub bucket_width: f64,
    pub active_bits: usize,
}

impl ScalarEncoder {
    pub fn new(min: f64, max: f64, bucket_width: f64, active_bits: usize) -> Result<Self> {
        if max.is_nan()
            || min.is_nan()
            || max < min
            || bucket_width.is_nan()
            || bucket_width <= 0.0
            || active_bits == 0
        {
            return Err(DlaError::config(
                "encoder",
                format!("min {min}, max {max}, bucket {bucket_width}, bits {active_bits}"),
            ));
        }
        Ok(Self {
            min,
            max,
            bucket_width,
            active_bits,
        })
    }

    pub fn buckets(&self) -> usize {
        ((self.max - self.min) / self.bucket_width).floor() as usize + 1
    }

    /// Total output width in bits.
    pub fn width(&self) -> usize {
        self.buckets() + self.active_bits - 1
    }

    pub fn bucket(&self, value: f64) -> Result<usize> {
        if !(value >= self.min && value <= self.max) {
            return Err(DlaError::OutOfRange {
                value,
                min: self.min,
                max: self.max,
            });
        }
        Ok(((value - self.min) / self.bucket_width).floor() as usize)
    }

    pub fn decode_bucket(&self, bucket: usize) -> f64 {
        self.min + bucket as f64 * self.bucket_width
    }
}

/// Bits `[b, b + active_bits)` set, where `b` is the value's bucket.
pub fn encode_scalar(value: f64, encoder: &ScalarEncoder) -> Result<Vec<bool>> {
    let b = encoder.bucket(value)?;
    let mut bits = vec![false; encoder.width()];
    bits[b..b + encoder.active_bits].fill(true);
    Ok(bits)
}

/// Concatenation of one scalar encoder per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarEncoder {
    encoders: Vec<ScalarEncoder>,
    offsets: Vec<usize>,
    width: usize,
}

impl ExemplarEncoder {
    /// Unit-bucket encoders spanning `0..=column max` of each feature.
    pub fn for_dataset(dataset: &QuantizedDataset, active_bits: usize) -> Result<Self> {
        let encoders = (0..dataset.width())
            .map(|j| ScalarEncoder::new(0.0, f64::from(dataset.column_max(j)), 1.0, active_bits))
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(encoders.len());
        let mut width = 0;
        for e in &encoders {
            offsets.push(width);
            width += e.width();
        }
        Ok(Self {
            encoders,
            offsets,
            width,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn encoders(&self) -> &[ScalarEncoder] {
        &self.encoders
    }

    pub fn encode(&self, exemplar: &[u32]) -> Result<Vec<bool>> {
        let mut bits = vec![false; self.width];
        for ((&v, e), &off) in exemplar.iter().zip(&self.encoders).zip(&self.offsets) {
            let b = e.bucket(f64::from(v))?;
            bits[off + b..off + b + e.active_bits].fill(true);
        }
        Ok(bits)
    }

    /// Snaps each value to its bucket's representative value.
    pub fn round_trip(&self, exemplar: &[u32]) -> Result<Vec<f64>> {
        exemplar
            .iter()
            .zip(&self.encoders)
            .map(|(&v, e)| Ok(e.decode_bucket(e.bucket(f64::from(v))?)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Synapse {
    input: u32,
    permanence: u8,
}

/// Columns with potential synapses onto the input bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPool {
    input_bits: usize,
    columns: Vec<Vec<Synapse>>,
    connected_threshold: u8,
}

impl ColumnPool {
    pub fn new<R: Rng + ?Sized>(input_bits: usize, params: &HtmParams, rng: &mut R) -> Self {
        let initial = to_units(params.initial_permanence);
        let columns = (0..params.columns)
            .map(|_| {
                (0..input_bits)
                    .filter(|_| rng.random_bool(params.potential_fraction))
                    .map(|bit| Synapse {
                        input: bit as u32,
                        permanence: initial,
                    })
                    .collect()
            })
            .collect();
        Self {
            input_bits,
            columns,
            connected_threshold: to_units(params.connected_threshold),
        }
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `(input bit, permanence)` of every potential synapse of a column.
    pub fn synapses(&self, column: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.columns[column]
            .iter()
            .map(|s| (s.input as usize, f64::from(s.permanence) / PERMANENCE_SCALE))
    }

    pub fn is_connected(&self, column: usize, synapse: usize) -> bool {
        self.columns[column][synapse].permanence >= self.connected_threshold
    }

    /// Hebbian update: synapses of active columns grow on active input bits
    /// and decay elsewhere, saturating at 0 and 1.
    pub fn learn(&mut self, input: &[bool], active_columns: &[usize], params: &HtmParams) {
        let inc = to_units(params.permanence_increment);
        let dec = to_units(params.permanence_decrement);
        for &c in active_columns {
            for s in &mut self.columns[c] {
                s.permanence = if input[s.input as usize] {
                    s.permanence.saturating_add(inc).min(PERMANENCE_MAX)
                } else {
                    s.permanence.saturating_sub(dec)
                };
            }
        }
    }

    /// Per column, the conducting-probability groups of synapses on active bits.
    fn overlap_groups(&self, input: &[bool]) -> Vec<Vec<(u64, f64)>> {
        self.columns
            .iter()
            .map(|syn| {
                let mut hist = [0u64; PERMANENCE_MAX as usize + 1];
                for s in syn.iter().filter(|s| input[s.input as usize]) {
                    hist[s.permanence as usize] += 1;
                }
                hist.iter()
                    .enumerate()
                    .filter(|&(p, &n)| p > 0 && n > 0)
                    .map(|(p, &n)| (n, p as f64 / PERMANENCE_SCALE))
                    .collect()
            })
            .collect()
    }
}

enum Conducting {
    All(u64),
    Sampled(Binomial),
}

/// Monte-Carlo spatial pooling of one input. Returns sorted active columns.
pub fn mc_spatial_pool<R: Rng + ?Sized>(
    input: &[bool],
    pool: &ColumnPool,
    params: &HtmParams,
    rng: &mut R,
) -> Vec<usize> {
    let groups: Vec<Vec<Conducting>> = pool
        .overlap_groups(input)
        .into_iter()
        .map(|g| {
            g.into_iter()
                .map(|(n, p)| {
                    if p >= 1.0 {
                        Conducting::All(n)
                    } else {
                        Conducting::Sampled(Binomial::new(n, p).expect("p in (0, 1)"))
                    }
                })
                .collect()
        })
        .collect();

    let k = params.desired_local_activity;
    let minimum = u64::from(params.minimum_overlap);
    let mut wins = vec![0u32; pool.len()];
    let mut overlaps = vec![0u64; pool.len()];
    let mut candidates: Vec<usize> = Vec::with_capacity(params.neighborhood_size);
    for _ in 0..params.mc_runs {
        for (o, g) in overlaps.iter_mut().zip(&groups) {
            *o = g
                .iter()
                .map(|c| match c {
                    Conducting::All(n) => *n,
                    Conducting::Sampled(b) => b.sample(rng),
                })
                .sum();
        }
        for start in (0..pool.len()).step_by(params.neighborhood_size) {
            let end = (start + params.neighborhood_size).min(pool.len());
            candidates.clear();
            candidates.extend((start..end).filter(|&c| overlaps[c] >= minimum));
            candidates.sort_by(|&a, &b| overlaps[b].cmp(&overlaps[a]).then(a.cmp(&b)));
            for &c in candidates.iter().take(k) {
                wins[c] += 1;
            }
        }
    }

    let mut active = Vec::new();
    for start in (0..pool.len()).step_by(params.neighborhood_size) {
        let end = (start + params.neighborhood_size).min(pool.len());
        let mut hood: Vec<usize> = (start..end).filter(|&c| wins[c] > 0).collect();
        hood.sort_by(|&a, &b| wins[b].cmp(&wins[a]).then(a.cmp(&b)));
        active.extend(hood.into_iter().take(k));
    }
    active.sort_unstable();
    active
}

fn sdr_overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtmRecord {
    pub timestep: usize,
    pub target: Vec<u32>,
    pub predicted: Vec<f64>,
    /// Earlier step whose successor was used.
    pub matched_step: usize,
    pub active_columns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtmOutcome {
    pub records: Vec<HtmRecord>,
    pub mapca: f64,
    pub pool: ColumnPool,
}

/// One-step-ahead prediction over the dataset, scored like the DLA engine.
pub fn htm_fit_predict(dataset: &QuantizedDataset, params: &HtmParams) -> Result<HtmOutcome> {
    params.validate()?;
    if dataset.len() < 3 {
        return Err(DlaError::EmptyDataset);
    }
    let encoder = ExemplarEncoder::for_dataset(dataset, params.active_bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pool = ColumnPool::new(encoder.width(), params, &mut rng);

    let mut history: Vec<Vec<usize>> = Vec::with_capacity(dataset.len());
    let mut records = Vec::new();
    for (t, row) in dataset.rows.iter().enumerate() {
        let bits = encoder.encode(row)?;
        let sdr = mc_spatial_pool(&bits, &pool, params, &mut rng);
        pool.learn(&bits, &sdr, params);

        if t >= 1 && t + 1 < dataset.len() {
            // successors are known for steps 0..t-1
            let (matched_step, _) = history
                .iter()
                .enumerate()
                .map(|(j, past)| (j, sdr_overlap(&sdr, past)))
                .fold((0, 0), |best, cur| if cur.1 >= best.1 { cur } else { best });
            records.push(HtmRecord {
                timestep: t,
                target: dataset.rows[t + 1].clone(),
                predicted: encoder.round_trip(&dataset.rows[matched_step + 1])?,
                matched_step,
                active_columns: sdr.len(),
            });
        }
        history.push(sdr);
    }

    let mut errors = Vec::with_capacity(records.len() * dataset.width());
    for r in &records {
        for ((&y, &yhat), m) in r.target.iter().zip(&r.predicted).zip(&dataset.maps) {
            errors.push(m.distance(f64::from(y), yhat));
        }
    }
    let mapca = mapca_from_errors(&errors, params.tolerance)?;
    Ok(HtmOutcome {
        records,
        mapca,
        pool,
    })
}
