//! Lane-anchor ablation: train the conditional model per objective cell
//! (xy-only, nt-only, nt+xy, nt+xy+Reg) on oracle anchors, then evaluate
//! with the three anchor-selection strategies (top-M by score, oracle
//! anchor, best-of-all pooled hypotheses).

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use lanecast::eval::{is_miss, is_offroad, made_mfde, mean_abs_normal, MetricReport};
use lanecast::geometry::{Point2, Polyline, Pose};
use lanecast::lanegraph::{retrieve_ranked_anchors, RetrievalParams};
use lanecast::learn::{
    encode_agent, train_conditional, AnchorModel, AnchorSample, LossConfig, TrainConfig,
};
use lanecast::synthgen::{gen_lane_scenario, LaneAgent, LaneScenario};

use super::{stream_seed, substream, write_reports};
use crate::config::{AblationCell, ExperimentConfig};
use crate::svg::{bounds, SvgCanvas};

pub struct LaneData {
    pub train: LaneScenario,
    pub eval: LaneScenario,
    pub samples: Vec<AnchorSample>,
    pub input_dim: usize,
}

fn agent_pose_speed(agent: &LaneAgent, dt: f64) -> (Pose, f64) {
    let n = agent.past.len();
    let speed = agent.past[n - 1].dist(agent.past[n - 2]) / dt;
    (Pose::new(agent.past[n - 1], agent.observed_yaw()), speed)
}

/// Oracle anchor: ranked against the full trajectory (past and future).
fn oracle_anchor(
    scenario: &LaneScenario,
    agent: &LaneAgent,
    dt: f64,
    params: &RetrievalParams,
) -> Result<Polyline> {
    let (pose, speed) = agent_pose_speed(agent, dt);
    let mut full = agent.past.clone();
    full.extend_from_slice(&agent.future);
    let ranked = retrieve_ranked_anchors(&scenario.graph, &pose, speed, &full, params)?;
    Ok(ranked.into_iter().next().unwrap().polyline)
}

/// Candidate anchors ranked by the observed past only.
fn observed_anchors(
    scenario: &LaneScenario,
    agent: &LaneAgent,
    dt: f64,
    params: &RetrievalParams,
    top_k: usize,
) -> Result<Vec<Polyline>> {
    let (pose, speed) = agent_pose_speed(agent, dt);
    let ranked =
        retrieve_ranked_anchors(&scenario.graph, &pose, speed, &agent.past, params)?;
    Ok(ranked
        .into_iter()
        .take(top_k)
        .map(|c| c.polyline)
        .collect())
}

pub fn build_data(config: &ExperimentConfig) -> Result<LaneData> {
    let lanes = &config.lanes;
    let train = gen_lane_scenario(&mut substream(config.seed, "lanes-train"), &lanes.gen)?;
    let eval_gen = lanecast::synthgen::LaneScenarioConfig {
        agent_count: lanes.eval_agent_count,
        ..lanes.gen.clone()
    };
    let eval = gen_lane_scenario(&mut substream(config.seed, "lanes-eval"), &eval_gen)?;
    let params = RetrievalParams::default();

    let mut samples = Vec::with_capacity(train.agents.len());
    for agent in &train.agents {
        let anchor = oracle_anchor(&train, agent, lanes.gen.dt, &params)?;
        let mask = vec![true; agent.past.len()];
        let (input, frame) = encode_agent(&agent.past, &mask, &anchor, lanes.anchor_points)?;
        let gt_nt = frame.nt_series(&agent.future);
        let gt_xy = frame.xy_series(&agent.future);
        samples.push(AnchorSample {
            input,
            frame,
            gt_nt,
            gt_xy,
        });
    }
    let input_dim = samples[0].input.values.len();
    Ok(LaneData {
        train,
        eval,
        samples,
        input_dim,
    })
}

fn cell_loss_config(config: &ExperimentConfig, cell: AblationCell) -> LossConfig {
    match cell {
        AblationCell::Xy => LossConfig {
            use_nt: false,
            use_xy: true,
            lambda1: 0.0,
            lambda2: 0.0,
        },
        AblationCell::Nt => LossConfig {
            use_nt: true,
            use_xy: false,
            lambda1: 0.0,
            lambda2: 0.0,
        },
        AblationCell::Ntxy => LossConfig {
            use_nt: true,
            use_xy: true,
            lambda1: 0.0,
            lambda2: 0.0,
        },
        AblationCell::NtxyReg => LossConfig {
            use_nt: true,
            use_xy: true,
            lambda1: config.lanes.lambda1,
            lambda2: config.lanes.lambda2,
        },
    }
}

pub fn train_cell(
    config: &ExperimentConfig,
    data: &LaneData,
    cell: AblationCell,
) -> Result<AnchorModel> {
    let lanes = &config.lanes;
    let horizon = lanes.gen.t_total - lanes.gen.t_obs;
    let mut model = AnchorModel::new(
        data.input_dim,
        &lanes.trunk,
        lanes.hypotheses,
        horizon,
        // identical init across cells: the comparison is loss-term-only
        &mut substream(config.seed, "lanes-model-init"),
    );
    let train_cfg = TrainConfig {
        epochs: lanes.epochs,
        batch_size: lanes.batch_size,
        lr: lanes.lr,
        lr_gamma: lanes.lr_gamma,
        seed: stream_seed(config.seed, "lanes-shuffle"),
    };
    let mut objective = config.objective.build(config.objective.kind);
    objective.split_interval = lanes.split_interval;
    train_conditional(
        &mut model,
        &data.samples,
        &objective,
        &cell_loss_config(config, cell),
        &train_cfg,
    )?;
    Ok(model)
}

/// Model trajectories (absolute xy) plus scores for one agent on one anchor.
fn predict(
    model: &AnchorModel,
    cell: AblationCell,
    agent: &LaneAgent,
    anchor: &Polyline,
    anchor_points: usize,
) -> Result<(Vec<Vec<Point2>>, Vec<f64>)> {
    let mask = vec![true; agent.past.len()];
    let (input, frame) = encode_agent(&agent.past, &mask, anchor, anchor_points)?;
    let (out, _) = model.forward(&input.values)?;
    let trajs = if cell.primary_is_nt() {
        out.nt.iter().map(|h| frame.nt_series_to_abs(h)).collect()
    } else {
        out.xy.iter().map(|h| frame.xy_series_to_abs(h)).collect()
    };
    Ok((trajs, out.logits))
}

/// Per-strategy aggregates over the evaluation scenario.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StrategyMetrics {
    pub made: f64,
    pub mfde: f64,
    pub miss_rate: f64,
    pub offroad_rate: f64,
    pub samples: usize,
}

pub struct CellEval {
    pub top_m: StrategyMetrics,
    pub oracle: StrategyMetrics,
    pub best_of_all: StrategyMetrics,
}

pub fn evaluate_cell(
    config: &ExperimentConfig,
    scenario: &LaneScenario,
    model: &AnchorModel,
    cell: AblationCell,
    bad_anchor_threshold: Option<f64>,
) -> Result<CellEval> {
    let lanes = &config.lanes;
    let params = RetrievalParams::default();
    let centerlines = scenario.graph.centerlines();
    let mut agg = [
        StrategyMetrics::default(),
        StrategyMetrics::default(),
        StrategyMetrics::default(),
    ];
    let mut offroad_counts = [0usize; 3];
    let mut hyp_counts = [0usize; 3];

    for agent in &scenario.agents {
        let anchors = observed_anchors(scenario, agent, lanes.gen.dt, &params, lanes.top_k_anchors)?;
        if let Some(threshold) = bad_anchor_threshold {
            if mean_abs_normal(&anchors[0], &agent.past) > threshold {
                continue;
            }
        }
        let mut pooled: Vec<Vec<Point2>> = Vec::new();
        let mut pooled_scores: Vec<f64> = Vec::new();
        for anchor in &anchors {
            let (trajs, scores) = predict(model, cell, agent, anchor, lanes.anchor_points)?;
            pooled.extend(trajs);
            pooled_scores.extend(scores);
        }
        let oracle = oracle_anchor(scenario, agent, lanes.gen.dt, &params)?;
        let (oracle_trajs, oracle_scores) =
            predict(model, cell, agent, &oracle, lanes.anchor_points)?;

        let gt = &agent.future;
        let m_sel = lanes.m_select.min(pooled.len());
        let strategies = [
            (&pooled, &pooled_scores, m_sel),
            (&oracle_trajs, &oracle_scores, oracle_trajs.len()),
            (&pooled, &pooled_scores, pooled.len()),
        ];
        for (idx, (trajs, scores, k)) in strategies.into_iter().enumerate() {
            let (made, mfde) = made_mfde(trajs, scores, gt, k);
            agg[idx].made += made;
            agg[idx].mfde += mfde;
            agg[idx].miss_rate +=
                f64::from(is_miss(trajs, scores, gt, k, lanes.miss_distance));
            for &sel in &lanecast::eval::top_k_by_score(scores, k) {
                hyp_counts[idx] += 1;
                if is_offroad(&trajs[sel], &centerlines, lanes.gen.corridor_halfwidth) {
                    offroad_counts[idx] += 1;
                }
            }
            agg[idx].samples += 1;
        }
    }

    for (idx, metrics) in agg.iter_mut().enumerate() {
        let n = metrics.samples.max(1) as f64;
        metrics.made /= n;
        metrics.mfde /= n;
        metrics.miss_rate /= n;
        metrics.offroad_rate = offroad_counts[idx] as f64 / hyp_counts[idx].max(1) as f64;
    }
    let [top_m, oracle, best_of_all] = agg;
    Ok(CellEval {
        top_m,
        oracle,
        best_of_all,
    })
}

pub fn rows_for_cell(
    config: &ExperimentConfig,
    cell: AblationCell,
    eval: &CellEval,
) -> Vec<MetricReport> {
    let row = |strategy: &str, m: &StrategyMetrics| MetricReport {
        experiment: "lanes".into(),
        variant: format!("{}/{strategy}", cell.name()),
        seed: config.seed,
        samples: m.samples,
        made: Some(m.made),
        mfde: Some(m.mfde),
        miss_rate: Some(m.miss_rate),
        miss_distance: Some(config.lanes.miss_distance),
        m_selected: Some(config.lanes.m_select),
        offroad_rate: Some(m.offroad_rate),
        ..MetricReport::default()
    };
    vec![
        row("topm", &eval.top_m),
        row("oracle", &eval.oracle),
        row("bofa", &eval.best_of_all),
    ]
}

pub fn run(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<MetricReport>, serde_json::Value)> {
    std::fs::create_dir_all(out_dir)?;
    let data = build_data(config)?;
    std::fs::write(out_dir.join("scenario_train.graph.json"), data.train.graph_json())?;
    std::fs::write(out_dir.join("scenario_train.agents.json"), data.train.agents_json())?;
    std::fs::write(out_dir.join("scenario_eval.graph.json"), data.eval.graph_json())?;
    std::fs::write(out_dir.join("scenario_eval.agents.json"), data.eval.agents_json())?;

    let mut rows = Vec::new();
    let mut extras = serde_json::Map::new();
    for &cell in &config.lanes.cells {
        let model = train_cell(config, &data, cell)?;
        std::fs::write(
            out_dir.join(format!("checkpoint_lanes_{}.json", cell.name())),
            serde_json::to_string(&model)?,
        )?;
        let eval = evaluate_cell(config, &data.eval, &model, cell, None)?;
        std::fs::write(
            out_dir.join(format!("lanes_{}.svg", cell.name())),
            render_predictions(config, &data.eval, &model, cell)?,
        )?;
        extras.insert(
            cell.name().into(),
            serde_json::json!({
                "topm": eval.top_m,
                "oracle": eval.oracle,
                "bofa": eval.best_of_all,
            }),
        );
        rows.extend(rows_for_cell(config, cell, &eval));
    }
    write_reports(out_dir, &rows)?;
    super::print_table(&rows);
    Ok((rows, serde_json::Value::Object(extras)))
}

/// Map plot: centerlines, ground-truth futures, and the top-scored
/// prediction for a handful of agents.
pub fn render_predictions(
    config: &ExperimentConfig,
    scenario: &LaneScenario,
    model: &AnchorModel,
    cell: AblationCell,
) -> Result<String> {
    let lanes = &config.lanes;
    let params = RetrievalParams::default();
    let mut groups: Vec<Vec<Point2>> = scenario
        .graph
        .centerlines()
        .iter()
        .map(|c| c.points().to_vec())
        .collect();
    let shown = scenario.agents.iter().take(6);
    let mut drawn: Vec<(Vec<Point2>, Vec<Point2>)> = Vec::new();
    for agent in shown {
        let anchors = observed_anchors(scenario, agent, lanes.gen.dt, &params, 1)?;
        let (trajs, scores) = predict(model, cell, agent, &anchors[0], lanes.anchor_points)?;
        let best = lanecast::eval::top_k_by_score(&scores, 1)[0];
        drawn.push((agent.future.clone(), trajs[best].clone()));
        groups.push(agent.future.clone());
        groups.push(trajs[best].clone());
    }
    let (min, max) = bounds(groups.iter().map(|g| g.as_slice()));
    let mut canvas = SvgCanvas::new(min, max, 640.0);
    for line in scenario.graph.centerlines() {
        canvas.polyline(line.points(), "#bbbbbb", 1.5, 1.0);
    }
    for (gt, pred) in &drawn {
        canvas.polyline(gt, "#1f77b4", 1.5, 0.9);
        canvas.polyline(pred, "#d62728", 1.5, 0.9);
    }
    canvas.caption(&format!("lanes {} (blue gt, red top-1)", cell.name()));
    Ok(canvas.finish())
}

/// Reload a cell checkpoint.
pub fn load_checkpoint(run_dir: &Path, cell: AblationCell) -> Result<AnchorModel> {
    let path = run_dir.join(format!("checkpoint_lanes_{}.json", cell.name()));
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing checkpoint {}", path.display()))
}
