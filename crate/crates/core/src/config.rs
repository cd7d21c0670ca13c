//! Experiment configuration files.
//!
//! A config file is TOML whose keys, flattened with dots, name
//! [`ExperimentConfig`] fields:
//!
//! ```toml
//! preset = "fig6"
//! trials = 2000
//! policies = ["greedy-reduced", "heuristic"]
//!
//! [model]
//! n_tx = 16
//! snr_db = 15.0
//!
//! [transition]
//! decay = 0.9
//! ```
//!
//! Values are applied on top of the preset (the file's `preset` key, or
//! `fig5a`); command-line flags are applied on top of the file.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::policies::PolicyKind;

pub const DEFAULT_PRESET: &str = "fig5a";

/// Every key accepted in a config file.
pub const KEYS: &[&str] = &[
    "preset",
    "name",
    "model.n_tx",
    "model.n_rx",
    "model.n_paths",
    "model.snr_db",
    "model.gain_var",
    "model.noise_var",
    "transition.bandwidth",
    "transition.decay",
    "transition.mix",
    "sensing.p_fa",
    "sensing.observation_mode",
    "m_p",
    "slots",
    "slot_length",
    "init",
    "reward",
    "policies",
    "trials",
    "seed",
];

/// Reads and resolves a config file. `preset` overrides the file's own
/// `preset` key.
pub fn load_config(path: &Path, preset: Option<&str>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text, preset).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str, preset: Option<&str>) -> Result<ExperimentConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
    let mut flat = Vec::new();
    flatten("", &table, &mut flat);

    let file_preset = flat
        .iter()
        .find(|(k, _)| k == "preset")
        .map(|(_, v)| as_str("preset", v))
        .transpose()?;
    let base = preset.or(file_preset).unwrap_or(DEFAULT_PRESET);
    let mut cfg = ExperimentConfig::preset(base)?;
    for (key, value) in &flat {
        apply(&mut cfg, key, value)?;
    }
    Ok(cfg)
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::config(format!("key '{key}' expects a string")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| Error::config(format!("key '{key}' expects a nonnegative integer")))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(format!("key '{key}' expects a number"))),
    }
}

/// Parses a comma-separated or array policy list.
pub fn parse_policies<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Vec<PolicyKind>> {
    items
        .into_iter()
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn apply(cfg: &mut ExperimentConfig, key: &str, v: &Value) -> Result<()> {
    let tagged = |e: Error| match e {
        Error::Config(msg) => Error::config(format!("key '{key}': {msg}")),
        other => other,
    };
    match key {
        "preset" => {}
        "name" => cfg.name = as_str(key, v)?.to_string(),
        "model.n_tx" => cfg.n_tx = as_usize(key, v)?,
        "model.n_rx" => cfg.n_rx = as_usize(key, v)?,
        "model.n_paths" => cfg.n_paths = as_usize(key, v)?,
        "model.snr_db" => cfg.snr_db = as_f64(key, v)?,
        "model.gain_var" => cfg.gain_var = as_f64(key, v)?,
        "model.noise_var" => cfg.noise_var = as_f64(key, v)?,
        "transition.bandwidth" => cfg.bandwidth = as_usize(key, v)?,
        "transition.decay" => cfg.decay = as_f64(key, v)?,
        "transition.mix" => cfg.mix = as_f64(key, v)?,
        "sensing.p_fa" => cfg.p_fa = as_f64(key, v)?,
        "sensing.observation_mode" => cfg.observation_mode = as_str(key, v)?.parse().map_err(tagged)?,
        "m_p" => cfg.m_p = as_usize(key, v)?,
        "slots" => cfg.slots = as_usize(key, v)?,
        "slot_length" => cfg.slot_length = as_usize(key, v)?,
        "init" => cfg.init = as_str(key, v)?.parse().map_err(tagged)?,
        "reward" => cfg.reward = as_str(key, v)?.parse().map_err(tagged)?,
        "policies" => {
            cfg.policies = match v {
                Value::String(s) => parse_policies([s.as_str()]),
                Value::Array(items) => items
                    .iter()
                    .map(|i| as_str(key, i))
                    .collect::<Result<Vec<_>>>()
                    .and_then(parse_policies),
                _ => Err(Error::config("expects a list of policy names")),
            }
            .map_err(tagged)?;
        }
        "trials" => cfg.trials = as_usize(key, v)?,
        "seed" => {
            cfg.seed = v
                .as_integer()
                .and_then(|i| u64::try_from(i).ok())
                .ok_or_else(|| Error::config(format!("key '{key}' expects a nonnegative integer")))?
        }
        other => {
            return Err(Error::config(format!(
                "unknown key '{other}' (known keys: {})",
                KEYS.join(", ")
            )))
        }
    }
    Ok(())
}
