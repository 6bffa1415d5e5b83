//! Experiment drivers. Everything here is plumbing around library calls.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use dla_core::{
    fit_predict, htm_fit_predict, load_csv, quantize, sweep_learning_extent, Benchmark, CsvSchema,
    FitOutcome, HtmOutcome, QuantSpec, QuantizedDataset,
};
use log::info;

use crate::config::{resolve, RunConfig};
use crate::error::CliError;

/// Reported accuracies of the reference runs, IRIS / HEART / Word-Similarity.
pub const REFERENCE_DLA: [f64; 3] = [86.0, 70.0, 72.5];
pub const REFERENCE_HTM: [f64; 3] = [77.03, 75.07, 79.35];

pub const RESULTS_FILE: &str = "results.csv";
pub const INDEX_FILE: &str = "index.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Dla,
    Htm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dla => "dla",
            Algorithm::Htm => "htm",
        }
    }

    pub fn reference(self, benchmark: Benchmark) -> f64 {
        let i = Benchmark::ALL
            .iter()
            .position(|&b| b == benchmark)
            .expect("benchmark listed in ALL");
        match self {
            Algorithm::Dla => REFERENCE_DLA[i],
            Algorithm::Htm => REFERENCE_HTM[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    Benchmark(Benchmark),
    Path(PathBuf),
}

impl DatasetSource {
    /// Benchmark names win over paths.
    pub fn parse(arg: &str) -> Self {
        Benchmark::from_name(arg).map_or_else(|| Self::Path(PathBuf::from(arg)), Self::Benchmark)
    }

    pub fn benchmark(&self) -> Option<Benchmark> {
        match self {
            Self::Benchmark(b) => Some(*b),
            Self::Path(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Benchmark(b) => b.name().to_owned(),
            Self::Path(p) => p.file_stem().map_or_else(
                || "dataset".to_owned(),
                |s| s.to_string_lossy().into_owned(),
            ),
        }
    }
}

/// Loads and quantizes a dataset under `cfg`. Min-max columns use
/// `learning_extent` levels.
pub fn load_dataset(
    source: &DatasetSource,
    data_dir: &Path,
    cfg: &RunConfig,
) -> Result<QuantizedDataset, CliError> {
    let levels = u32::try_from(cfg.dla.learning_extent)
        .map_err(|_| CliError::Usage("learning_extent is too large".to_owned()))?;
    let (path, schema, spec) = match source {
        DatasetSource::Benchmark(b) => (
            data_dir.join(b.file_name()),
            b.schema(),
            b.quant_spec(levels),
        ),
        DatasetSource::Path(p) => (
            p.clone(),
            CsvSchema {
                has_header: cfg.has_header,
                ..CsvSchema::default()
            },
            QuantSpec::min_max(levels),
        ),
    };
    let mut raw = load_csv(&path, &schema)?;
    if !cfg.include_label {
        raw = raw.without_label();
    }
    let spec = cfg.quant_scale.map_or(spec, QuantSpec::scale);
    Ok(quantize(&raw, &spec)?)
}

/// What a run used and wrote. Rendered as a config file whose header
/// comments carry the run metadata, so it can be fed back via `--config`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub config: RunConfig,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub config_hash: String,
}

impl RunManifest {
    pub fn new(
        dataset: String,
        algorithm: Algorithm,
        config: &RunConfig,
        outputs: Vec<String>,
    ) -> Self {
        Self {
            dataset,
            algorithm,
            seed: config.seed(),
            config_hash: config.hash(),
            config: config.clone(),
            outputs,
        }
    }

    pub fn file_name(&self) -> String {
        format!("manifest_{}_{}.txt", self.dataset, self.algorithm.name())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dataset = {}", self.dataset);
        let _ = writeln!(s, "# algorithm = {}", self.algorithm.name());
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# config_hash = {}", self.config_hash);
        for o in &self.outputs {
            let _ = writeln!(s, "# output = {o}");
        }
        s.push_str(&self.config.to_config_text());
        s
    }
}

/// One-line summary of a DLA pass.
pub fn emit_report(
    label: &str,
    outcome: &FitOutcome,
    dataset: &QuantizedDataset,
) -> Result<String, CliError> {
    let (Some(first), Some(last)) = (outcome.records.first(), outcome.records.last()) else {
        return Err(CliError::Usage(format!(
            "{label}: no prediction records to report"
        )));
    };
    let mapca = outcome.mapca(dataset, outcome.state.config().tolerance)?;
    Ok(format!(
        "{label}: mapca {mapca:.2}%  k_r {:.4} -> {:.4}  winners {}  memory rows {}",
        first.k_r,
        last.k_r,
        outcome.state.winners().len(),
        outcome.state.memory().map_or(0, |m| m.len()),
    ))
}

fn htm_report(label: &str, outcome: &HtmOutcome) -> String {
    let active = outcome
        .records
        .iter()
        .map(|r| r.active_columns)
        .max()
        .unwrap_or(0);
    format!(
        "{label}: mapca {:.2}%  predictions {}  max active columns {active}",
        outcome.mapca,
        outcome.records.len()
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub benchmark: Option<Benchmark>,
    pub algorithm: Algorithm,
    pub mapca: f64,
    pub seed: u64,
    pub config_hash: String,
    pub report: String,
}

pub struct Experiment1 {
    pub sources: Vec<DatasetSource>,
    pub algorithms: Vec<Algorithm>,
    pub config_text: Option<String>,
    pub seed: Option<u64>,
    pub data_dir: PathBuf,
    pub out: PathBuf,
}

struct Job {
    source: DatasetSource,
    name: String,
    algorithm: Algorithm,
    config: RunConfig,
    dataset: QuantizedDataset,
}

fn run_job(job: &Job) -> Result<ResultRow, CliError> {
    let label = format!("{} {}", job.name, job.algorithm.name());
    info!("running {label}");
    let (mapca, report) = match job.algorithm {
        Algorithm::Dla => {
            let outcome = fit_predict(&job.dataset, &job.config.dla)?;
            let mapca = outcome.mapca(&job.dataset, job.config.dla.tolerance)?;
            (mapca, emit_report(&label, &outcome, &job.dataset)?)
        }
        Algorithm::Htm => {
            let outcome = htm_fit_predict(&job.dataset, &job.config.htm)?;
            (outcome.mapca, htm_report(&label, &outcome))
        }
    };
    Ok(ResultRow {
        dataset: job.name.clone(),
        benchmark: job.source.benchmark(),
        algorithm: job.algorithm,
        mapca,
        seed: job.config.seed(),
        config_hash: job.config.hash(),
        report,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("dataset,algorithm,mapca_percent,seed,config_hash\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.2},{},{}",
            r.dataset,
            r.algorithm.name(),
            r.mapca,
            r.seed,
            r.config_hash
        );
    }
    s
}

/// Measured against reported accuracies, one line per row.
pub fn comparison_table(rows: &[ResultRow]) -> String {
    let mut s = format!(
        "{:<10} {:<5} {:>9} {:>9}\n",
        "dataset", "algo", "measured", "reported"
    );
    for r in rows {
        let reported = r.benchmark.map_or_else(
            || "-".to_owned(),
            |b| format!("{:.2}", r.algorithm.reference(b)),
        );
        let _ = writeln!(
            s,
            "{:<10} {:<5} {:>9.2} {:>9}",
            r.dataset,
            r.algorithm.name(),
            r.mapca,
            reported
        );
    }
    s
}

pub fn resolve_for(
    source: &DatasetSource,
    config_text: Option<&str>,
    seed: Option<u64>,
) -> Result<RunConfig, CliError> {
    resolve(
        source.benchmark(),
        config_text,
        |k| std::env::var(k).ok(),
        seed,
    )
}

/// Runs every (dataset, algorithm) pair in parallel and writes the results
/// table and one manifest per pair. Returns the text to print.
pub fn run_experiment1(exp: &Experiment1) -> Result<(Vec<ResultRow>, String), CliError> {
    let mut jobs = Vec::new();
    for source in &exp.sources {
        let config = resolve_for(source, exp.config_text.as_deref(), exp.seed)?;
        let dataset = load_dataset(source, &exp.data_dir, &config)?;
        for &algorithm in &exp.algorithms {
            jobs.push(Job {
                source: source.clone(),
                name: source.name(),
                algorithm,
                config: config.clone(),
                dataset: dataset.clone(),
            });
        }
    }
    let rows: Vec<ResultRow> = thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|j| s.spawn(move || run_job(j))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment worker panicked"))
            .collect::<Result<_, _>>()
    })?;

    create_out(&exp.out)?;
    write_file(&exp.out.join(RESULTS_FILE), &results_csv(&rows))?;
    for job in &jobs {
        let m = RunManifest::new(
            job.name.clone(),
            job.algorithm,
            &job.config,
            vec![RESULTS_FILE.to_owned()],
        );
        write_file(&exp.out.join(m.file_name()), &m.render())?;
    }

    let mut text = String::new();
    for r in &rows {
        let _ = writeln!(text, "{}", r.report);
    }
    if exp.algorithms.contains(&Algorithm::Dla) && exp.algorithms.contains(&Algorithm::Htm) {
        text.push('\n');
        text.push_str(&comparison_table(&rows));
    }
    Ok((rows, text))
}

pub struct Experiment2 {
    pub source: DatasetSource,
    pub extents: Vec<usize>,
    pub config_text: Option<String>,
    pub seed: Option<u64>,
    pub data_dir: PathBuf,
    pub out: PathBuf,
}

pub fn extent_file_name(extent: usize) -> String {
    format!("extent_{extent}.csv")
}

/// Headerless grid, one row per prediction step, values in original units.
pub fn prediction_grid(outcome: &FitOutcome, dataset: &QuantizedDataset) -> String {
    let mut s = String::new();
    for row in outcome.prediction_matrix() {
        let cells: Vec<String> = row
            .iter()
            .zip(&dataset.maps)
            .map(|(&v, m)| m.dequantize(v).to_string())
            .collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Sweeps the learning extent and writes one prediction grid per extent plus
/// an index. The dataset is quantized once under the base config.
pub fn run_experiment2(exp: &Experiment2) -> Result<String, CliError> {
    if exp.extents.is_empty() {
        return Err(CliError::Usage(
            "--extents needs at least one value".to_owned(),
        ));
    }
    let config = resolve_for(&exp.source, exp.config_text.as_deref(), exp.seed)?;
    let dataset = load_dataset(&exp.source, &exp.data_dir, &config)?;
    let runs = sweep_learning_extent(&dataset, &config.dla, &exp.extents)?;

    create_out(&exp.out)?;
    let mut index = String::from("extent,file\n");
    let mut outputs = vec![INDEX_FILE.to_owned()];
    let mut text = String::new();
    let name = exp.source.name();
    let features: Vec<usize> = (0..dataset.width()).collect();
    for run in &runs {
        let file = extent_file_name(run.extent);
        write_file(
            &exp.out.join(&file),
            &prediction_grid(&run.outcome, &dataset),
        )?;
        let _ = writeln!(index, "{},{file}", run.extent);
        let label = format!("{name} extent {}", run.extent);
        let _ = writeln!(
            text,
            "{}  coverage {:.3}",
            emit_report(&label, &run.outcome, &dataset)?,
            run.outcome.coverage(&dataset, &features)
        );
        outputs.push(file);
    }
    write_file(&exp.out.join(INDEX_FILE), &index)?;
    let manifest = RunManifest::new(name, Algorithm::Dla, &config, outputs);
    write_file(&exp.out.join(manifest.file_name()), &manifest.render())?;
    Ok(text)
}
