//! Experiment configuration: one TOML file with per-experiment sections,
//! unknown keys rejected, every field defaulted. CLI flags override the
//! file.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lanecast::objectives::{Objective, ObjectiveKind};
use lanecast::synthgen::{CpiConfig, LaneScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub objective: ObjectiveConfig,
    pub toy: ToyConfig,
    pub cpi: CpiRunConfig,
    pub lanes: LanesRunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    pub eps: f64,
    pub split_interval: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            kind: ObjectiveKind::Dac,
            eps: 0.05,
            split_interval: 2000,
        }
    }
}

impl ObjectiveConfig {
    pub fn build(&self, kind: ObjectiveKind) -> Objective {
        Objective::new(kind, self.eps, self.split_interval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    /// Half-diagonal of the four-corner mode layout (m).
    pub separation: f64,
    pub sigma: f64,
    pub hypotheses: usize,
    pub steps: usize,
    pub lr: f64,
    /// Std-dev of the Gaussian hypothesis init around the origin.
    pub init_spread: f64,
    pub eval_samples: usize,
    /// Steps counted for the final-window win tally.
    pub window: usize,
    pub variants: Vec<ObjectiveKind>,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            separation: 6.0,
            sigma: 0.3,
            hypotheses: 8,
            steps: 10_000,
            lr: 0.02,
            init_spread: 1.0,
            eval_samples: 2048,
            window: 1000,
            variants: ObjectiveKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpiRunConfig {
    pub gen: CpiConfig,
    pub train_scenes: usize,
    pub heldout_scenes: usize,
    pub eval_scenes: usize,
    /// Target draws per training scene.
    pub targets_per_scene: usize,
    /// Ground-truth draws per evaluation scene (FDE averaging and EMD).
    pub gt_samples_per_scene: usize,
    pub hypotheses: usize,
    pub trunk: Vec<usize>,
    pub epochs: usize,
    pub stage2_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_gamma: f64,
    pub variants: Vec<ObjectiveKind>,
    /// Log-spaced sigma search grid: lo, hi, count.
    pub sigma_grid: (f64, f64, usize),
    /// Split interval scaled to this experiment's iteration count.
    pub split_interval: usize,
}

impl Default for CpiRunConfig {
    fn default() -> Self {
        Self {
            gen: CpiConfig::default(),
            train_scenes: 192,
            heldout_scenes: 32,
            eval_scenes: 64,
            targets_per_scene: 4,
            gt_samples_per_scene: 64,
            hypotheses: 8,
            trunk: vec![64, 64],
            epochs: 60,
            stage2_epochs: 12,
            batch_size: 8,
            lr: 1e-3,
            lr_gamma: 0.97,
            variants: ObjectiveKind::ALL.to_vec(),
            sigma_grid: (0.05, 2.0, 25),
            split_interval: 600,
        }
    }
}

/// The four ablation cells of the lane experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationCell {
    /// Cartesian head only.
    Xy,
    /// Anchor (nt) head only.
    Nt,
    /// Both heads, no cross regularizers.
    Ntxy,
    /// Both heads plus the cross regularizers.
    NtxyReg,
}

impl AblationCell {
    pub fn name(&self) -> &'static str {
        match self {
            AblationCell::Xy => "xy",
            AblationCell::Nt => "nt",
            AblationCell::Ntxy => "ntxy",
            AblationCell::NtxyReg => "ntxy_reg",
        }
    }

    /// Does this cell read its trajectories from the nt head?
    pub fn primary_is_nt(&self) -> bool {
        !matches!(self, AblationCell::Xy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanesRunConfig {
    pub gen: LaneScenarioConfig,
    /// Anchor resample count fed to the model input.
    pub anchor_points: usize,
    pub hypotheses: usize,
    pub trunk: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_gamma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub cells: Vec<AblationCell>,
    /// Candidate anchors evaluated per agent (ranked by observed past).
    pub top_k_anchors: usize,
    /// Hypotheses kept by the top-M selection strategy.
    pub m_select: usize,
    /// Miss-rate displacement threshold (m).
    pub miss_distance: f64,
    /// Split interval scaled to this experiment's iteration count.
    pub split_interval: usize,
    /// Agents in the held-out evaluation scenario.
    pub eval_agent_count: usize,
}

impl Default for LanesRunConfig {
    fn default() -> Self {
        Self {
            gen: LaneScenarioConfig {
                agent_count: 64,
                ..LaneScenarioConfig::default()
            },
            anchor_points: 50,
            hypotheses: 6,
            trunk: vec![128, 128],
            epochs: 300,
            batch_size: 8,
            lr: 1e-3,
            lr_gamma: 0.995,
            lambda1: 0.3,
            lambda2: 0.3,
            cells: vec![
                AblationCell::Xy,
                AblationCell::Nt,
                AblationCell::Ntxy,
                AblationCell::NtxyReg,
            ],
            top_k_anchors: 3,
            m_select: 6,
            miss_distance: 2.0,
            split_interval: 300,
            eval_agent_count: 256,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Stable content hash over the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}
