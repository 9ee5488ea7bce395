//! Run manifest: the resolved config, its hash, the seed, the tree version
//! and a summary of results. Written atomically at run end so partial runs
//! never leave a manifest behind.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub git_describe: String,
    pub wall_clock_secs: f64,
    /// Full resolved config, embedded so `eval` can regenerate the data.
    pub config: ExperimentConfig,
    /// Per-metric results and experiment extras.
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            git_describe: git_describe(),
            wall_clock_secs: 0.0,
            config: config.clone(),
            results: serde_json::Value::Null,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))
    }

    /// Write-then-rename so readers never observe a torn manifest.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&tmp, text)
            .with_context(|| format!("writing manifest {}", tmp.display()))?;
        std::fs::rename(&tmp, path)
            .with_context(|| format!("committing manifest {}", path.display()))?;
        Ok(())
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}
