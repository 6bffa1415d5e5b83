//! Benchmark harness for the deviant learning algorithm and its HTM baseline.
//!
//! Experiment 1 scores one-step-ahead prediction on the vendored benchmarks;
//! experiment 2 sweeps the learning extent and writes prediction grids.

pub mod config;
pub mod error;
pub mod run;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use dla_core::{Benchmark, DEFAULT_EXTENTS};

pub use config::{resolve, RunConfig};
pub use error::CliError;
pub use run::{emit_report, Algorithm, DatasetSource, RunManifest};

pub const DEFAULT_DATA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Dla,
    Htm,
    Both,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "dla", version, about = "Deviant learning benchmark harness")]
pub struct Args {
    /// 1: benchmark accuracy table, 2: learning-extent sweep.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub experiment: u8,

    /// iris, heart, wordsim, all, or a path to a CSV file.
    /// Defaults to all for experiment 1 and iris for experiment 2.
    #[arg(long)]
    pub dataset: Option<String>,

    /// Defaults to both for experiment 1; experiment 2 only supports dla.
    #[arg(long, value_enum)]
    pub algo: Option<AlgoArg>,

    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Comma-separated learning extents for experiment 2.
    #[arg(long, value_delimiter = ',')]
    pub extents: Option<Vec<usize>>,

    #[arg(long, default_value = "results")]
    pub out: PathBuf,

    /// Directory holding the benchmark CSV files.
    #[arg(long, default_value = DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
}

fn sources(dataset: &str) -> Vec<DatasetSource> {
    if dataset.eq_ignore_ascii_case("all") {
        Benchmark::ALL
            .iter()
            .map(|&b| DatasetSource::Benchmark(b))
            .collect()
    } else {
        vec![DatasetSource::parse(dataset)]
    }
}

/// Runs the experiment selected by `args` and returns the text to print.
pub fn run(args: &Args) -> Result<String, CliError> {
    let config_text = args
        .config
        .as_ref()
        .map(|p| fs::read_to_string(p).map_err(|e| CliError::io(p, e)))
        .transpose()?;
    match args.experiment {
        1 => {
            if args.extents.is_some() {
                return Err(CliError::Usage(
                    "--extents only applies to experiment 2".to_owned(),
                ));
            }
            let algorithms = match args.algo.unwrap_or(AlgoArg::Both) {
                AlgoArg::Dla => vec![Algorithm::Dla],
                AlgoArg::Htm => vec![Algorithm::Htm],
                AlgoArg::Both => vec![Algorithm::Dla, Algorithm::Htm],
            };
            let exp = run::Experiment1 {
                sources: sources(args.dataset.as_deref().unwrap_or("all")),
                algorithms,
                config_text,
                seed: args.seed,
                data_dir: args.data_dir.clone(),
                out: args.out.clone(),
            };
            Ok(run::run_experiment1(&exp)?.1)
        }
        _ => {
            if matches!(args.algo, Some(AlgoArg::Htm | AlgoArg::Both)) {
                return Err(CliError::Usage(
                    "experiment 2 sweeps the DLA learning extent; use --algo dla".to_owned(),
                ));
            }
            let mut picked = sources(args.dataset.as_deref().unwrap_or("iris"));
            if picked.len() != 1 {
                return Err(CliError::Usage(
                    "experiment 2 takes a single dataset".to_owned(),
                ));
            }
            let exp = run::Experiment2 {
                source: picked.remove(0),
                extents: args
                    .extents
                    .clone()
                    .unwrap_or_else(|| DEFAULT_EXTENTS.to_vec()),
                config_text,
                seed: args.seed,
                data_dir: args.data_dir.clone(),
                out: args.out.clone(),
            };
            run::run_experiment2(&exp)
        }
    }
}
