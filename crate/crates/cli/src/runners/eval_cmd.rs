//! Re-evaluate a frozen run: regenerate the evaluation data from the
//! manifest's embedded config and seed, reload the checkpoints, and recompute
//! the reports. Without a bad-anchor filter the output is bit-identical to
//! the training run's report.

use std::path::Path;

use anyhow::{bail, Context, Result};

use lanecast::eval::MetricReport;
use lanecast::learn::GoalModel;

use super::{cpi, lanes, write_reports};
use crate::manifest::RunManifest;

pub fn run(
    run_dir: &Path,
    out_dir: &Path,
    filter_bad_anchors: Option<f64>,
) -> Result<(Vec<MetricReport>, serde_json::Value)> {
    let manifest = RunManifest::load(&run_dir.join("manifest.json"))?;
    let config = &manifest.config;
    let rows = match manifest.experiment.as_str() {
        "lanes" => {
            let data = lanes::build_data(config)?;
            let mut rows = Vec::new();
            for &cell in &config.lanes.cells {
                let model = lanes::load_checkpoint(run_dir, cell)?;
                let eval =
                    lanes::evaluate_cell(config, &data.eval, &model, cell, filter_bad_anchors)?;
                rows.extend(lanes::rows_for_cell(config, cell, &eval));
            }
            rows
        }
        "cpi" => {
            if filter_bad_anchors.is_some() {
                bail!("--filter-bad-anchors applies to lane runs only");
            }
            let data = cpi::build_data(config)?;
            let mut rows = Vec::new();
            for &variant in &config.cpi.variants {
                let path = run_dir.join(format!("checkpoint_cpi_{}.json", variant.name()));
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading checkpoint {}", path.display()))?;
                let model: GoalModel = serde_json::from_str(&text)
                    .with_context(|| format!("parsing checkpoint {}", path.display()))?;
                let eval = cpi::evaluate(config, &data, &model)?;
                rows.push(MetricReport {
                    experiment: "cpi".into(),
                    variant: variant.name().into(),
                    seed: config.seed,
                    samples: data.eval.len(),
                    oracle_fde: Some(eval.oracle_fde),
                    emd: Some(eval.emd),
                    ..MetricReport::default()
                });
            }
            rows
        }
        other => bail!("run '{other}' has no checkpoints to evaluate"),
    };
    write_reports(out_dir, &rows)?;
    super::print_table(&rows);
    let results = serde_json::json!({
        "source_run": run_dir.display().to_string(),
        "filter_bad_anchors": filter_bad_anchors,
    });
    Ok((rows, results))
}
