//! Experiment runners behind the subcommands.

pub mod cpi;
pub mod eval_cmd;
pub mod fit_toy;
pub mod lanes;
pub mod plot;

use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use lanecast::eval::MetricReport;
use lanecast::synthgen::{seeded_rng, SeededRng};

/// Derived seed per (seed, purpose), so streams never overlap.
pub fn stream_seed(seed: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Independent deterministic stream per (seed, purpose).
pub fn substream(seed: u64, tag: &str) -> SeededRng {
    seeded_rng(stream_seed(seed, tag))
}

/// Write metrics.csv and report.json for a finished run.
pub fn write_reports(out_dir: &Path, rows: &[MetricReport]) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut csv = String::from(MetricReport::CSV_HEADER);
    csv.push('\n');
    for row in rows {
        row.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    std::fs::write(out_dir.join("metrics.csv"), csv)?;
    let json = serde_json::to_string_pretty(rows).expect("reports serialize");
    std::fs::write(out_dir.join("report.json"), json)?;
    Ok(())
}

/// Console table: one row per report, the columns that are present.
pub fn print_table(rows: &[MetricReport]) {
    println!(
        "{:<18} {:>10} {:>10} {:>8} {:>8} {:>8} {:>9} {:>9}",
        "variant", "oracle_fde", "emd", "made", "mfde", "miss", "offroad", "spurious"
    );
    for r in rows {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<18} {:>10} {:>10} {:>8} {:>8} {:>8} {:>9} {:>9}",
            r.variant,
            cell(r.oracle_fde),
            cell(r.emd),
            cell(r.made),
            cell(r.mfde),
            cell(r.miss_rate),
            cell(r.offroad_rate),
            cell(r.spurious_count),
        );
    }
}
