//! Re-render SVG plots from the JSON artifacts a run left behind: toy
//! scatter dumps and lane scenario files.

use std::path::Path;

use anyhow::{bail, Context, Result};

use lanecast::geometry::Point2;
use lanecast::synthgen::LaneScenario;

use super::fit_toy::{render_scatter, ToyDump};
use crate::svg::{bounds, SvgCanvas};

pub fn run(run_dir: &Path, out_dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(out_dir)?;
    let mut emitted = 0usize;

    let mut entries: Vec<_> = std::fs::read_dir(run_dir)
        .with_context(|| format!("reading run dir {}", run_dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());

    for entry in entries {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("toy_") && name.ends_with(".json") {
            let dump: ToyDump = serde_json::from_str(&std::fs::read_to_string(entry.path())?)
                .with_context(|| format!("parsing {name}"))?;
            let svg_name = name.replace(".json", ".svg");
            std::fs::write(out_dir.join(svg_name), render_scatter(&dump))?;
            emitted += 1;
        }
    }

    // lane scenario map, when both files are present
    for stem in ["scenario_eval", "scenario_train"] {
        let graph = run_dir.join(format!("{stem}.graph.json"));
        let agents = run_dir.join(format!("{stem}.agents.json"));
        if graph.exists() && agents.exists() {
            let scenario = LaneScenario::from_jsons(
                &std::fs::read_to_string(graph)?,
                &std::fs::read_to_string(agents)?,
            )?;
            std::fs::write(
                out_dir.join(format!("{stem}.svg")),
                render_scenario(&scenario, stem),
            )?;
            emitted += 1;
        }
    }

    if emitted == 0 {
        bail!("no plottable artifacts found in {}", run_dir.display());
    }
    Ok(emitted)
}

fn render_scenario(scenario: &LaneScenario, caption: &str) -> String {
    let mut groups: Vec<Vec<Point2>> = scenario
        .graph
        .centerlines()
        .iter()
        .map(|c| c.points().to_vec())
        .collect();
    for agent in &scenario.agents {
        groups.push(agent.past.clone());
        groups.push(agent.future.clone());
    }
    let (min, max) = bounds(groups.iter().map(|g| g.as_slice()));
    let mut canvas = SvgCanvas::new(min, max, 640.0);
    for line in scenario.graph.centerlines() {
        canvas.polyline(line.points(), "#bbbbbb", 1.5, 1.0);
    }
    for agent in &scenario.agents {
        canvas.polyline(&agent.past, "#2ca02c", 1.0, 0.7);
        canvas.polyline(&agent.future, "#1f77b4", 1.0, 0.7);
    }
    canvas.caption(&format!("{caption} (green past, blue future)"));
    canvas.finish()
}
