//! Evaluation machinery: oracle displacement errors, earth mover's distance,
//! score-selected mADE/mFDE and miss rate, off-road rate, spurious-mode
//! counting and bad-anchor filtering.
//!
//! Reported metrics are unsquared Euclidean meters. Everything here is pure:
//! the same inputs produce a bit-identical report, and summation order is
//! fixed (sample index order).

mod mixture;
mod transport;

pub use mixture::{fit_mixture, log_spaced_grid, MixtureModel, MixtureWeights};
pub use transport::transport_cost;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Polyline};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Empty(&'static str),
    #[error("dimension mismatch between inputs")]
    DimensionMismatch,
    #[error("transport masses differ beyond 1e-9: supply {supply}, demand {demand}")]
    MassMismatch { supply: f64, demand: f64 },
    #[error("weights must be finite, non-negative and not all zero")]
    BadWeights,
    #[error("transportation solver exceeded its pivot budget")]
    SolverStall,
    #[error("{0}")]
    BadParam(&'static str),
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Minimum final-point distance over the hypotheses.
pub fn oracle_fde(endpoints: &[Vec<f64>], gt_endpoint: &[f64]) -> f64 {
    assert!(!endpoints.is_empty(), "need at least one hypothesis");
    endpoints
        .iter()
        .map(|e| euclid(e, gt_endpoint))
        .fold(f64::INFINITY, f64::min)
}

/// Earth mover's distance between a weighted hypothesis set and uniformly
/// weighted ground-truth samples, Euclidean ground metric, solved exactly.
pub fn emd(
    predicted: &[Vec<f64>],
    weights: &[f64],
    gt_samples: &[Vec<f64>],
) -> Result<f64, EvalError> {
    if predicted.len() != weights.len() {
        return Err(EvalError::DimensionMismatch);
    }
    let uniform = vec![1.0 / gt_samples.len() as f64; gt_samples.len()];
    emd_weighted(predicted, weights, gt_samples, &uniform)
}

/// General weighted-to-weighted EMD.
pub fn emd_weighted(
    a_points: &[Vec<f64>],
    a_weights: &[f64],
    b_points: &[Vec<f64>],
    b_weights: &[f64],
) -> Result<f64, EvalError> {
    if a_points.is_empty() || b_points.is_empty() {
        return Err(EvalError::Empty("point sets must be non-empty"));
    }
    if a_points.len() != a_weights.len() || b_points.len() != b_weights.len() {
        return Err(EvalError::DimensionMismatch);
    }
    let dim = a_points[0].len();
    if a_points.iter().chain(b_points).any(|p| p.len() != dim) {
        return Err(EvalError::DimensionMismatch);
    }
    transport_cost(a_weights, b_weights, |i, j| {
        euclid(&a_points[i], &b_points[j])
    })
}

/// Indices of the top `k` scores, descending, ties broken by lower index.
pub fn top_k_by_score(scores: &[f64], k: usize) -> Vec<usize> {
    assert!(k <= scores.len(), "selection exceeds hypothesis count");
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

fn ade(traj: &[Point2], gt: &[Point2]) -> f64 {
    let total: f64 = traj.iter().zip(gt).map(|(a, b)| a.dist(*b)).sum();
    total / gt.len() as f64
}

fn fde(traj: &[Point2], gt: &[Point2]) -> f64 {
    traj.last().unwrap().dist(*gt.last().unwrap())
}

fn max_displacement(traj: &[Point2], gt: &[Point2]) -> f64 {
    traj.iter()
        .zip(gt)
        .map(|(a, b)| a.dist(*b))
        .fold(0.0, f64::max)
}

/// Min average / final displacement over the top `m_sel` hypotheses by
/// score.
pub fn made_mfde(
    hypotheses: &[Vec<Point2>],
    scores: &[f64],
    gt: &[Point2],
    m_sel: usize,
) -> (f64, f64) {
    let selected = top_k_by_score(scores, m_sel);
    let made = selected
        .iter()
        .map(|&i| ade(&hypotheses[i], gt))
        .fold(f64::INFINITY, f64::min);
    let mfde = selected
        .iter()
        .map(|&i| fde(&hypotheses[i], gt))
        .fold(f64::INFINITY, f64::min);
    (made, mfde)
}

/// A sample is a miss iff no top-`m_sel` hypothesis keeps its maximum
/// displacement below `d`.
pub fn is_miss(
    hypotheses: &[Vec<Point2>],
    scores: &[f64],
    gt: &[Point2],
    m_sel: usize,
    d: f64,
) -> bool {
    assert!(d > 0.0, "miss threshold must be positive");
    top_k_by_score(scores, m_sel)
        .iter()
        .all(|&i| max_displacement(&hypotheses[i], gt) >= d)
}

/// A trajectory is off-road iff some point is farther than
/// `corridor_halfwidth` from every lane centerline (exactly on the boundary
/// counts as inside).
pub fn is_offroad(traj: &[Point2], lanes: &[&Polyline], corridor_halfwidth: f64) -> bool {
    assert!(corridor_halfwidth > 0.0, "corridor halfwidth must be positive");
    traj.iter().any(|&p| {
        lanes
            .iter()
            .map(|l| l.distance_to(p))
            .fold(f64::INFINITY, f64::min)
            > corridor_halfwidth
    })
}

/// Fraction of trajectories that leave the corridor.
pub fn offroad_rate(trajs: &[Vec<Point2>], lanes: &[&Polyline], corridor_halfwidth: f64) -> f64 {
    if trajs.is_empty() {
        return 0.0;
    }
    let off = trajs
        .iter()
        .filter(|t| is_offroad(t, lanes, corridor_halfwidth))
        .count();
    off as f64 / trajs.len() as f64
}

/// Number of hypotheses whose Voronoi cell (nearest-hypothesis assignment)
/// captures less than `tau` of the evaluation samples. `None` uses the
/// default tau = 0.1 / M.
pub fn spurious_mode_count(
    hypotheses: &[Vec<f64>],
    eval_points: &[Vec<f64>],
    tau: Option<f64>,
) -> usize {
    assert!(!hypotheses.is_empty() && !eval_points.is_empty());
    let m = hypotheses.len();
    let tau = tau.unwrap_or(0.1 / m as f64);
    let mut counts = vec![0usize; m];
    for p in eval_points {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, h) in hypotheses.iter().enumerate() {
            let d = euclid(h, p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        counts[best] += 1;
    }
    counts
        .iter()
        .filter(|&&c| (c as f64 / eval_points.len() as f64) < tau)
        .count()
}

/// Mean |n| of the past trajectory against an anchor; the bad-anchor
/// criterion.
pub fn mean_abs_normal(anchor: &Polyline, past: &[Point2]) -> f64 {
    assert!(!past.is_empty());
    let total: f64 = past
        .iter()
        .map(|&p| anchor.project_xy_to_nt(p).n.abs())
        .sum();
    total / past.len() as f64
}

/// Keep samples whose mean-|n| score is at most `threshold` (3 m by
/// default in the CLI).
pub fn filter_bad_anchors<T>(
    samples: Vec<T>,
    threshold: f64,
    score: impl Fn(&T) -> f64,
) -> Vec<T> {
    assert!(threshold > 0.0, "threshold must be positive");
    samples
        .into_iter()
        .filter(|s| score(s) <= threshold)
        .collect()
}

/// One row of evaluation results. Fields a given experiment does not
/// produce stay `None` and serialize to empty CSV cells.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub experiment: String,
    pub variant: String,
    pub seed: u64,
    pub samples: usize,
    pub oracle_fde: Option<f64>,
    pub emd: Option<f64>,
    pub made: Option<f64>,
    pub mfde: Option<f64>,
    pub miss_rate: Option<f64>,
    pub miss_distance: Option<f64>,
    pub m_selected: Option<usize>,
    pub offroad_rate: Option<f64>,
    pub spurious_count: Option<f64>,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "experiment,variant,seed,samples,oracle_fde,emd,made,\
                                          mfde,miss_rate,miss_distance,m_selected,offroad_rate,\
                                          spurious_count";

    pub fn csv_row(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.6}")).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.variant,
            self.seed,
            self.samples,
            opt(self.oracle_fde),
            opt(self.emd),
            opt(self.made),
            opt(self.mfde),
            opt(self.miss_rate),
            opt(self.miss_distance),
            self.m_selected.map(|v| v.to_string()).unwrap_or_default(),
            opt(self.offroad_rate),
            opt(self.spurious_count),
        )
    }

    /// Rates in [0,1], distances non-negative.
    pub fn validate(&self) -> Result<(), EvalError> {
        for r in [self.miss_rate, self.offroad_rate].into_iter().flatten() {
            if !(0.0..=1.0).contains(&r) {
                return Err(EvalError::BadParam("rate outside [0, 1]"));
            }
        }
        for d in [self.oracle_fde, self.emd, self.made, self.mfde]
            .into_iter()
            .flatten()
        {
            if d < 0.0 || !d.is_finite() {
                return Err(EvalError::BadParam("distance must be non-negative"));
            }
        }
        Ok(())
    }
}
