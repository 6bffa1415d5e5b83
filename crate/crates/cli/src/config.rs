//! Run configuration: presets, `key = value` files and `DLA_*` environment
//! overrides, plus the canonical snapshot used for manifests and hashing.

use std::str::FromStr;

use dla_core::{Activation, Benchmark, DlaConfig, HtmParams, WinnerThreshold};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "DLA_";

/// Every recognized key, in canonical (sorted) order.
pub const KEYS: &[&str] = &[
    "activation",
    "has_header",
    "htm_active_bits",
    "htm_columns",
    "htm_connected_threshold",
    "htm_desired_local_activity",
    "htm_initial_permanence",
    "htm_mc_runs",
    "htm_minimum_overlap",
    "htm_neighborhood_size",
    "htm_permanence_decrement",
    "htm_permanence_increment",
    "htm_potential_fraction",
    "htm_tolerance",
    "include_label",
    "initial_permanence",
    "learning_extent",
    "noise_scale",
    "post_threshold",
    "quant_scale",
    "rho2",
    "rho2_lim",
    "seed",
    "store_threshold",
    "time_limit",
    "tolerance",
    "winner_threshold",
];

/// Everything a run depends on besides the input file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dla: DlaConfig,
    pub htm: HtmParams,
    /// Keep the class column as a feature.
    pub include_label: bool,
    /// Only consulted for user-supplied files.
    pub has_header: bool,
    /// Uniform scale for every column; `None` keeps the dataset's own scheme.
    pub quant_scale: Option<f64>,
}

impl RunConfig {
    pub fn preset(benchmark: Option<Benchmark>) -> Self {
        Self {
            dla: DlaConfig::default(),
            htm: benchmark.map_or_else(HtmParams::default, HtmParams::for_benchmark),
            include_label: true,
            has_header: true,
            quant_scale: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.dla.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.dla.seed = seed;
        self.htm.seed = seed;
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let d = &mut self.dla;
        let h = &mut self.htm;
        match key {
            "activation" => {
                if v != "tanh" {
                    return Err(bad(key, v, "only `tanh` is available from config"));
                }
                d.activation = Activation::Tanh;
            }
            "has_header" => self.has_header = parse(key, v)?,
            "htm_active_bits" => h.active_bits = parse(key, v)?,
            "htm_columns" => h.columns = parse(key, v)?,
            "htm_connected_threshold" => h.connected_threshold = parse(key, v)?,
            "htm_desired_local_activity" => h.desired_local_activity = parse(key, v)?,
            "htm_initial_permanence" => h.initial_permanence = parse(key, v)?,
            "htm_mc_runs" => h.mc_runs = parse(key, v)?,
            "htm_minimum_overlap" => h.minimum_overlap = parse(key, v)?,
            "htm_neighborhood_size" => h.neighborhood_size = parse(key, v)?,
            "htm_permanence_decrement" => h.permanence_decrement = parse(key, v)?,
            "htm_permanence_increment" => h.permanence_increment = parse(key, v)?,
            "htm_potential_fraction" => h.potential_fraction = parse(key, v)?,
            "htm_tolerance" => h.tolerance = parse(key, v)?,
            "include_label" => self.include_label = parse(key, v)?,
            "initial_permanence" => d.initial_permanence = parse(key, v)?,
            "learning_extent" => d.learning_extent = parse(key, v)?,
            "noise_scale" => d.noise_scale = parse(key, v)?,
            "post_threshold" => d.post_threshold = parse_auto(key, v)?,
            "quant_scale" => self.quant_scale = parse_auto(key, v)?,
            "rho2" => d.rho2 = parse(key, v)?,
            "rho2_lim" => d.rho2_lim = parse(key, v)?,
            "seed" => self.set_seed(parse(key, v)?),
            "store_threshold" => d.store_threshold = parse(key, v)?,
            "time_limit" => d.time_limit = parse(key, v)?,
            "tolerance" => d.tolerance = parse(key, v)?,
            "winner_threshold" => {
                d.winner_threshold = match parse_auto::<u64>(key, v)? {
                    None => WinnerThreshold::Auto,
                    Some(n) => WinnerThreshold::AtLeast(n),
                }
            }
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in [`KEYS`] order. Feeding them back through
    /// [`RunConfig::set`] reproduces `self`.
    pub fn snapshot(&self) -> Vec<(&'static str, String)> {
        let d = &self.dla;
        let h = &self.htm;
        let auto = |v: Option<String>| v.unwrap_or_else(|| "auto".to_owned());
        let activation = match d.activation {
            Activation::Tanh => "tanh".to_owned(),
            Activation::Custom(_) => "custom".to_owned(),
        };
        let values = [
            activation,
            self.has_header.to_string(),
            h.active_bits.to_string(),
            h.columns.to_string(),
            h.connected_threshold.to_string(),
            h.desired_local_activity.to_string(),
            h.initial_permanence.to_string(),
            h.mc_runs.to_string(),
            h.minimum_overlap.to_string(),
            h.neighborhood_size.to_string(),
            h.permanence_decrement.to_string(),
            h.permanence_increment.to_string(),
            h.potential_fraction.to_string(),
            h.tolerance.to_string(),
            self.include_label.to_string(),
            d.initial_permanence.to_string(),
            d.learning_extent.to_string(),
            d.noise_scale.to_string(),
            auto(d.post_threshold.map(|v| v.to_string())),
            auto(self.quant_scale.map(|v| v.to_string())),
            d.rho2.to_string(),
            d.rho2_lim.to_string(),
            d.seed.to_string(),
            d.store_threshold.to_string(),
            d.time_limit.to_string(),
            d.tolerance.to_string(),
            d.winner_threshold.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }

    /// Renders the snapshot as a config file body.
    pub fn to_config_text(&self) -> String {
        self.snapshot()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::to_config_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_config_text().as_bytes());
        hex::encode(digest)[..16].to_owned()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dla.validate()?;
        self.htm.validate()?;
        if let Some(s) = self.quant_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(bad(
                    "quant_scale",
                    &s.to_string(),
                    "must be a finite value > 0",
                ));
            }
        }
        Ok(())
    }
}

fn bad(key: &str, value: &str, reason: &str) -> CliError {
    CliError::Usage(format!("config key `{key}` = `{value}`: {reason}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| bad(key, value, &e.to_string()))
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected `key = value`, got `{}`",
                n + 1,
                raw.trim()
            )));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key `{key}`",
                n + 1
            )));
        }
        entries.push((key.to_owned(), value.trim().to_owned()));
    }
    Ok(entries)
}

/// Builds the effective config. Precedence, lowest first: preset, file,
/// environment, explicit seed.
pub fn resolve<E>(
    benchmark: Option<Benchmark>,
    file_text: Option<&str>,
    env: E,
    seed: Option<u64>,
) -> Result<RunConfig, CliError>
where
    E: Fn(&str) -> Option<String>,
{
    let mut cfg = RunConfig::preset(benchmark);
    if let Some(text) = file_text {
        for (k, v) in parse_config_text(text)? {
            cfg.set(&k, &v)?;
        }
    }
    for key in KEYS {
        let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
        if let Some(v) = env(&var) {
            cfg.set(key, &v)
                .map_err(|e| CliError::Usage(format!("environment variable {var}: {e}")))?;
        }
    }
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    cfg.validate()?;
    Ok(cfg)
}
