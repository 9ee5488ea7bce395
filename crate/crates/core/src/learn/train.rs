//! Mini-batch trainers: the conditional lane model under the combined
//! objective, and the two-stage goal model (hypotheses first, assignment
//! head second) used by the car-pedestrian protocol.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::anchor_loss::{anchor_loss, LossBreakdown, LossConfig};
use super::encode::{AnchorFrame, EncodedInput};
use super::loss::{ioc_target_q, per_hypothesis_l2, score_loss, score_loss_grad_logits};
use super::model::{AnchorModel, GoalModel};
use super::LearnError;
use crate::objectives::Objective;
use crate::synthgen::seeded_rng;

/// One training sample for the lane model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSample {
    pub input: EncodedInput,
    pub frame: AnchorFrame,
    pub gt_nt: Vec<f64>,
    pub gt_xy: Vec<f64>,
}

/// One training sample for the goal model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_gamma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 8,
            lr: 1e-4,
            lr_gamma: 0.95,
            seed: 0,
        }
    }
}

/// Per-iteration loss curve.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub curves: Vec<LossBreakdown>,
    pub iterations: usize,
}

/// Train the lane model: seeded shuffled mini-batches; every iteration runs
/// forward, loss, backward and one Adam step; the split schedules advance by
/// iteration count; the learning rate decays at epoch ends.
pub fn train_conditional(
    model: &mut AnchorModel,
    data: &[AnchorSample],
    objective: &Objective,
    loss_config: &LossConfig,
    cfg: &TrainConfig,
) -> Result<TrainReport, LearnError> {
    if data.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    loss_config.validate()?;
    assert!(cfg.batch_size >= 1, "batch size must be >= 1");

    let mut rng = seeded_rng(cfg.seed);
    let mut params = model.net.params_flat();
    let mut adam = AdamState::new(params.len(), cfg.lr, cfg.lr_gamma);
    let mut report = TrainReport::default();
    let mut iter = 0usize;
    let mut indices: Vec<usize> = (0..data.len()).collect();

    for _epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grad_acc = vec![0.0; params.len()];
            let mut mean = LossBreakdown::default();
            for &si in batch {
                let sample = &data[si];
                let (outputs, cache) = model.forward(&sample.input.values)?;
                let (breakdown, grads) = anchor_loss(
                    &outputs,
                    &sample.gt_nt,
                    &sample.gt_xy,
                    &sample.frame,
                    loss_config,
                    objective,
                    iter,
                );
                if !breakdown.total.is_finite() {
                    return Err(LearnError::NonFiniteLoss { iter });
                }
                let flat = model.backward(&cache, &grads.nt, &grads.xy, &grads.logits);
                for (a, g) in grad_acc.iter_mut().zip(flat) {
                    *a += scale * g;
                }
                mean.total += scale * breakdown.total;
                mean.nt += scale * breakdown.nt;
                mean.xy += scale * breakdown.xy;
                mean.reg_nt_from_xy += scale * breakdown.reg_nt_from_xy;
                mean.reg_xy_from_nt += scale * breakdown.reg_xy_from_nt;
                mean.score += scale * breakdown.score;
            }
            adam.step(&mut params, &grad_acc)?;
            model.net.set_params_flat(&params);
            report.curves.push(mean);
            iter += 1;
        }
        adam.end_epoch();
    }
    report.iterations = iter;
    Ok(report)
}

/// Stage losses of the two-stage goal training.
#[derive(Debug, Clone, Default)]
pub struct TwoStageReport {
    pub stage1: Vec<f64>,
    pub stage2: Vec<f64>,
}

/// Two-stage protocol: stage one trains trunk and hypothesis head under the
/// chosen variant; stage two freezes them and fits the assignment head with
/// cross-entropy against the soft-assignment target.
pub fn train_two_stage(
    model: &mut GoalModel,
    data: &[GoalSample],
    objective: &Objective,
    stage2_epochs: usize,
    cfg: &TrainConfig,
) -> Result<TwoStageReport, LearnError> {
    if data.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut params = model.net.params_flat();
    let mut report = TwoStageReport::default();
    let m = model.hypotheses;
    let mut indices: Vec<usize> = (0..data.len()).collect();

    // stage 1: hypotheses under the WTA variant
    let mut adam = AdamState::new(params.len(), cfg.lr, cfg.lr_gamma);
    let mut iter = 0usize;
    for _epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grad_acc = vec![0.0; params.len()];
            let mut mean = 0.0;
            for &si in batch {
                let sample = &data[si];
                let (out, cache) = model.forward(&sample.input)?;
                let losses = per_hypothesis_l2(&out.goals, &sample.target, 1);
                let weights = objective.weights_at(&losses, iter);
                let combined = weights.combine(&losses);
                if !combined.is_finite() {
                    return Err(LearnError::NonFiniteLoss { iter });
                }
                mean += scale * combined;
                let g_goals: Vec<Vec<f64>> = out
                    .goals
                    .iter()
                    .zip(weights.values())
                    .map(|(goal, &w)| {
                        goal.iter()
                            .zip(&sample.target)
                            .map(|(p, t)| w * 2.0 * (p - t))
                            .collect()
                    })
                    .collect();
                let g_logits = vec![0.0; m];
                let flat = model.backward(&cache, &g_goals, &g_logits);
                for (a, g) in grad_acc.iter_mut().zip(flat) {
                    *a += scale * g;
                }
            }
            adam.step(&mut params, &grad_acc)?;
            model.net.set_params_flat(&params);
            report.stage1.push(mean);
            iter += 1;
        }
        adam.end_epoch();
    }

    // stage 2: assignment head only; trunk and hypothesis gradients zeroed
    let frozen = model.net.trunk_param_count() + model.net.head_param_count(0);
    let mut adam = AdamState::new(params.len(), cfg.lr, cfg.lr_gamma);
    for _epoch in 0..stage2_epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grad_acc = vec![0.0; params.len()];
            let mut mean = 0.0;
            for &si in batch {
                let sample = &data[si];
                let (out, cache) = model.forward(&sample.input)?;
                let d = per_hypothesis_l2(&out.goals, &sample.target, 1);
                let q = ioc_target_q(&d);
                mean += scale * score_loss(&out.logits, &q);
                let g_logits = score_loss_grad_logits(&out.logits, &q);
                let g_goals = vec![vec![0.0; model.goal_dim]; m];
                let mut flat = model.backward(&cache, &g_goals, &g_logits);
                flat[..frozen].iter_mut().for_each(|g| *g = 0.0);
                for (a, g) in grad_acc.iter_mut().zip(flat) {
                    *a += scale * g;
                }
            }
            adam.step(&mut params, &grad_acc)?;
            model.net.set_params_flat(&params);
            report.stage2.push(mean);
        }
        adam.end_epoch();
    }
    Ok(report)
}
