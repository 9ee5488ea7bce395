//! Toy experiment: fit M free hypotheses to the four-corner multimodal
//! distribution under each requested variant, on the same seed and data
//! stream, and compare oracle FDE, EMD and spurious-mode counts.

use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use lanecast::eval::{emd, oracle_fde, spurious_mode_count, MetricReport};
use lanecast::geometry::Point2;
use lanecast::learn::{fit_unconditional, FitReport, HypothesisParams};
use lanecast::objectives::ObjectiveKind;
use lanecast::synthgen::{four_corner_modes, sample_multimodal, ModeSpec};

use super::{substream, write_reports};
use crate::config::ExperimentConfig;
use crate::svg::{bounds, SvgCanvas};

/// Everything needed to re-render the scatter plot later.
#[derive(Debug, Serialize, Deserialize)]
pub struct ToyDump {
    pub variant: String,
    pub samples: Vec<Vec<f64>>,
    pub hypotheses: Vec<Vec<f64>>,
    pub mode_means: Vec<Vec<f64>>,
}

pub fn run(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<MetricReport>, serde_json::Value)> {
    let toy = &config.toy;
    let modes = four_corner_modes(toy.separation, toy.sigma);
    let eval_points = sample_multimodal(
        &modes,
        toy.eval_samples,
        &mut substream(config.seed, "toy-eval"),
    )?;

    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    let mut extras = serde_json::Map::new();
    for &variant in &toy.variants {
        let (report, fitted) = fit_variant(config, &modes, variant)?;
        let hyps = &fitted.hypotheses;

        let fde_mean = eval_points
            .iter()
            .map(|p| oracle_fde(hyps, p))
            .sum::<f64>()
            / eval_points.len() as f64;

        // mixture weights from the final-window win tally; uniform when no
        // fitting happened (steps = 0)
        let window = toy.window.min(report.winners.len());
        let counts: Vec<f64> = if window == 0 {
            vec![1.0; hyps.len()]
        } else {
            report
                .counts(report.winners.len() - window..report.winners.len())
                .into_iter()
                .map(|c| c as f64)
                .collect()
        };
        let total: f64 = counts.iter().sum();
        let weights: Vec<f64> = if total > 0.0 {
            counts.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / hyps.len() as f64; hyps.len()]
        };
        let emd_value = emd(hyps, &weights, &eval_points)?;
        let spurious = spurious_mode_count(hyps, &eval_points, None);

        let row = MetricReport {
            experiment: "toy".into(),
            variant: variant.name().into(),
            seed: config.seed,
            samples: eval_points.len(),
            oracle_fde: Some(fde_mean),
            emd: Some(emd_value),
            spurious_count: Some(spurious as f64),
            ..MetricReport::default()
        };
        rows.push(row);

        let dump = ToyDump {
            variant: variant.name().into(),
            samples: eval_points.clone(),
            hypotheses: hyps.clone(),
            mode_means: modes.iter().map(|m| m.mean.clone()).collect(),
        };
        let dump_path = out_dir.join(format!("toy_{}.json", variant.name()));
        std::fs::write(&dump_path, serde_json::to_string_pretty(&dump)?)?;
        let svg = render_scatter(&dump);
        std::fs::write(out_dir.join(format!("toy_{}.svg", variant.name())), svg)?;

        extras.insert(
            variant.name().into(),
            serde_json::json!({
                "final_window_wins": counts,
                "spurious": spurious,
            }),
        );
    }

    write_reports(out_dir, &rows)?;
    super::print_table(&rows);
    Ok((rows, serde_json::Value::Object(extras)))
}

fn fit_variant(
    config: &ExperimentConfig,
    modes: &[ModeSpec],
    variant: ObjectiveKind,
) -> Result<(FitReport, HypothesisParams)> {
    let toy = &config.toy;
    let init = HypothesisParams::init_gaussian(
        toy.hypotheses,
        &[0.0, 0.0],
        toy.init_spread,
        &mut substream(config.seed, "toy-init"),
    );
    if toy.steps == 0 {
        // emit the initial hypotheses unchanged
        let report = FitReport {
            params: init.clone(),
            winners: Vec::new(),
        };
        return Ok((report, init));
    }
    let objective = config.objective.build(variant);
    let modes = modes.to_vec();
    let report = fit_unconditional(
        init,
        move |rng| {
            sample_multimodal(&modes, 1, rng)
                .expect("valid modes")
                .pop()
                .unwrap()
        },
        &objective,
        toy.lr,
        toy.steps,
        // same fitting stream for every variant: same seed, same data
        crate::runners::stream_seed(config.seed, "toy-fit"),
    )?;
    let params = report.params.clone();
    Ok((report, params))
}

pub fn render_scatter(dump: &ToyDump) -> String {
    let to_pts = |v: &[Vec<f64>]| -> Vec<Point2> {
        v.iter().map(|p| Point2::new(p[0], p[1])).collect()
    };
    let samples = to_pts(&dump.samples);
    let hyps = to_pts(&dump.hypotheses);
    let means = to_pts(&dump.mode_means);
    let (min, max) = bounds([samples.as_slice(), hyps.as_slice(), means.as_slice()]);
    let mut canvas = SvgCanvas::new(min, max, 480.0);
    for p in &samples {
        canvas.circle(*p, 1.2, "#9ecae1", 0.5);
    }
    for m in &means {
        canvas.cross(*m, 6.0, "#333333");
    }
    for h in &hyps {
        canvas.circle(*h, 4.0, "#d62728", 0.9);
    }
    canvas.caption(&format!("toy {}", dump.variant));
    canvas.finish()
}
