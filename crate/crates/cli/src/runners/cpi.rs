//! Car-pedestrian protocol: train the two-stage goal model under each
//! variant on identical scenes, fit the mixture sigma on held-out scenes,
//! then report oracle FDE and EMD against drawn ground-truth samples.

use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use lanecast::eval::{emd, log_spaced_grid, oracle_fde, MetricReport, MixtureModel};
use lanecast::learn::{softmax, train_two_stage, GoalModel, GoalSample, TrainConfig};
use lanecast::objectives::ObjectiveKind;
use lanecast::synthgen::{gen_cpi, CpiScene, SeededRng};

use super::{stream_seed, substream, write_reports};
use crate::config::ExperimentConfig;

/// One evaluation scene: encoded input plus drawn ground-truth goals.
pub struct EvalScene {
    pub input: Vec<f64>,
    pub gt_draws: Vec<Vec<f64>>,
}

pub struct CpiData {
    pub train: Vec<GoalSample>,
    pub heldout: Vec<EvalScene>,
    pub eval: Vec<EvalScene>,
    pub input_dim: usize,
}

/// All datasets are functions of (config, seed) only.
pub fn build_data(config: &ExperimentConfig) -> Result<CpiData> {
    let cpi = &config.cpi;
    let gen_scenes = |tag: &str, count: usize| -> Result<Vec<CpiScene>> {
        let mut rng = substream(config.seed, tag);
        (0..count)
            .map(|_| gen_cpi(&mut rng, &cpi.gen).map_err(Into::into))
            .collect()
    };

    let mut train = Vec::new();
    {
        let scenes = gen_scenes("cpi-train", cpi.train_scenes)?;
        let mut rng = substream(config.seed, "cpi-train-targets");
        for scene in &scenes {
            let input = scene.input_vec();
            for _ in 0..cpi.targets_per_scene {
                train.push(GoalSample {
                    input: input.clone(),
                    target: scene.draw_target(&mut rng),
                });
            }
        }
    }

    let eval_scenes = |tag: &str, count: usize, draws: usize| -> Result<Vec<EvalScene>> {
        let scenes = gen_scenes(tag, count)?;
        let mut rng = substream(config.seed, &format!("{tag}-draws"));
        Ok(scenes
            .iter()
            .map(|scene| EvalScene {
                input: scene.input_vec(),
                gt_draws: draw_many(scene, draws, &mut rng),
            })
            .collect())
    };
    let heldout = eval_scenes("cpi-heldout", cpi.heldout_scenes, cpi.gt_samples_per_scene)?;
    let eval = eval_scenes("cpi-eval", cpi.eval_scenes, cpi.gt_samples_per_scene)?;

    let input_dim = train
        .first()
        .map(|s| s.input.len())
        .ok_or_else(|| anyhow::anyhow!("no training scenes configured"))?;
    Ok(CpiData {
        train,
        heldout,
        eval,
        input_dim,
    })
}

fn draw_many(scene: &CpiScene, count: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..count).map(|_| scene.draw_target(rng)).collect()
}

/// Evaluation results for one trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpiEval {
    pub oracle_fde: f64,
    pub emd: f64,
    pub sigma: f64,
}

pub fn train_variant(
    config: &ExperimentConfig,
    data: &CpiData,
    variant: ObjectiveKind,
) -> Result<GoalModel> {
    let cpi = &config.cpi;
    let mut model = GoalModel::new(
        data.input_dim,
        &cpi.trunk,
        cpi.hypotheses,
        4,
        // identical init across variants: the comparison is objective-only
        &mut substream(config.seed, "cpi-model-init"),
    );
    let mut objective = config.objective.build(variant);
    objective.split_interval = cpi.split_interval;
    let train_cfg = TrainConfig {
        epochs: cpi.epochs,
        batch_size: cpi.batch_size,
        lr: cpi.lr,
        lr_gamma: cpi.lr_gamma,
        seed: stream_seed(config.seed, "cpi-shuffle"),
    };
    train_two_stage(&mut model, &data.train, &objective, cpi.stage2_epochs, &train_cfg)?;
    Ok(model)
}

/// Oracle FDE and EMD on the evaluation scenes; the mixture sigma is fit on
/// the held-out scenes by pooled log-likelihood over the grid.
pub fn evaluate(config: &ExperimentConfig, data: &CpiData, model: &GoalModel) -> Result<CpiEval> {
    let (lo, hi, count) = config.cpi.sigma_grid;
    let grid = log_spaced_grid(lo, hi, count);
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &sigma in &grid {
        let mut total = 0.0;
        for scene in &data.heldout {
            let mixture = scene_mixture(model, scene, sigma)?;
            total += mixture.mean_log_likelihood(&scene.gt_draws);
        }
        if total > best.0 {
            best = (total, sigma);
        }
    }
    let sigma = best.1;

    let mut fde_total = 0.0;
    let mut emd_total = 0.0;
    for scene in &data.eval {
        let mixture = scene_mixture(model, scene, sigma)?;
        let per_draw: f64 = scene
            .gt_draws
            .iter()
            .map(|draw| oracle_fde(&mixture.means, draw))
            .sum();
        fde_total += per_draw / scene.gt_draws.len() as f64;
        emd_total += emd(&mixture.means, &mixture.weights, &scene.gt_draws)?;
    }
    let n = data.eval.len() as f64;
    Ok(CpiEval {
        oracle_fde: fde_total / n,
        emd: emd_total / n,
        sigma,
    })
}

fn scene_mixture(model: &GoalModel, scene: &EvalScene, sigma: f64) -> Result<MixtureModel> {
    let (out, _) = model.forward(&scene.input)?;
    Ok(MixtureModel {
        means: out.goals,
        weights: softmax(&out.logits),
        sigma,
    })
}

pub fn run(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<MetricReport>, serde_json::Value)> {
    std::fs::create_dir_all(out_dir)?;
    let data = build_data(config)?;
    let mut rows = Vec::new();
    let mut extras = serde_json::Map::new();
    for &variant in &config.cpi.variants {
        let model = train_variant(config, &data, variant)?;
        let eval = evaluate(config, &data, &model)?;
        std::fs::write(
            out_dir.join(format!("checkpoint_cpi_{}.json", variant.name())),
            serde_json::to_string(&model)?,
        )?;
        rows.push(MetricReport {
            experiment: "cpi".into(),
            variant: variant.name().into(),
            seed: config.seed,
            samples: data.eval.len(),
            oracle_fde: Some(eval.oracle_fde),
            emd: Some(eval.emd),
            ..MetricReport::default()
        });
        extras.insert(variant.name().into(), serde_json::to_value(&eval)?);
    }
    write_reports(out_dir, &rows)?;
    super::print_table(&rows);
    Ok((rows, serde_json::Value::Object(extras)))
}
