//! CSV result files and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{AggregateResult, EpisodeTrace, ExperimentConfig};

pub const RESULTS_HEADER: &str = "preset,policy,slot,mean_reward,acc_reward,ci95,n_trials";
pub const TRACE_HEADER: &str = "slot,true_columns,sensed_columns,flags,reward";

/// Long-format results, one row per (preset, policy, slot). `ci95` is the
/// half-width for the per-slot mean.
pub fn results_csv(results: &[AggregateResult]) -> String {
    let mut out = String::new();
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        for p in &r.policies {
            for k in 0..r.slots {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.preset,
                    p.policy,
                    k + 1,
                    p.mean_reward[k],
                    p.acc_reward[k],
                    p.mean_ci95[k],
                    r.n_trials
                );
            }
        }
    }
    out
}

/// One episode, one row per slot. Column lists are `;`-separated.
pub fn trace_csv(trace: &EpisodeTrace) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in &trace.slots {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.slot,
            s.columns.iter().join(";"),
            s.action,
            s.observation,
            s.reward
        );
    }
    out
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub timestamp_unix: u64,
    /// Per-trial seeds are drawn from a ChaCha8 generator seeded with the
    /// master seed, one stream per trial index.
    pub seed_scheme: &'static str,
    pub configs: Vec<ExperimentConfig>,
    pub outputs: Vec<PathBuf>,
    pub results: Vec<AggregateResult>,
}

impl RunManifest {
    pub fn new(command: &str, configs: Vec<ExperimentConfig>, outputs: Vec<PathBuf>, results: Vec<AggregateResult>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            seed_scheme: "chacha8(master).stream(trial).next_u64",
            configs,
            outputs,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
