//! Winner-takes-all loss family for multi-hypothesis training.
//!
//! Each variant is a rule mapping the M per-hypothesis losses to a vector of
//! per-hypothesis weights; the combined training loss is the weighted sum.
//!
//! - WTA: weight 1 on the argmin hypothesis.
//! - RWTA: winner 1, every other hypothesis a small residual `eps`.
//! - EWTA: uniform 1/k over the top-k winners, k annealed from M to 1.
//! - DAC: hypotheses are partitioned into 2^(depth-1) contiguous sets by
//!   recursive halving; the set containing the global argmin is updated with
//!   its mean loss. The partition refines every `split_interval` iterations,
//!   reaching singleton sets (plain WTA) at max depth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("loss vector must be non-empty")]
    Empty,
    #[error("loss value at index {0} is negative or non-finite")]
    BadLoss(usize),
    #[error("eps must be in (0, 1), got {0}")]
    BadEps(f64),
    #[error("k must satisfy 1 <= k <= {m}, got {k}")]
    BadK { k: usize, m: usize },
    #[error("depth must satisfy 1 <= depth <= {max}, got {depth}")]
    BadDepth { depth: usize, max: usize },
}

/// Per-hypothesis losses (non-negative, finite).
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ObjectiveError> {
        if values.is_empty() {
            return Err(ObjectiveError::Empty);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(ObjectiveError::BadLoss(i));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the smallest loss, ties broken by lowest index.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for i in 1..self.0.len() {
            if self.0[i] < self.0[best] {
                best = i;
            }
        }
        best
    }
}

/// Per-hypothesis weights in [0, 1] assigned by a WTA variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantWeights(Vec<f64>);

impl VariantWeights {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Weighted sum of per-hypothesis losses.
    pub fn combine(&self, losses: &LossVector) -> f64 {
        self.0
            .iter()
            .zip(losses.values())
            .map(|(w, l)| w * l)
            .sum()
    }
}

/// Weight 1 on the single argmin hypothesis, 0 elsewhere.
pub fn wta_weights(losses: &LossVector) -> VariantWeights {
    let mut w = vec![0.0; losses.len()];
    w[losses.argmin()] = 1.0;
    VariantWeights(w)
}

/// Winner gets 1, every other hypothesis gets `eps`.
pub fn rwta_weights(losses: &LossVector, eps: f64) -> Result<VariantWeights, ObjectiveError> {
    if eps.is_nan() || eps <= 0.0 || eps >= 1.0 {
        return Err(ObjectiveError::BadEps(eps));
    }
    let mut w = vec![eps; losses.len()];
    w[losses.argmin()] = 1.0;
    Ok(VariantWeights(w))
}

/// Weight 1/k on each of the k smallest losses (index tie-break).
pub fn ewta_weights(losses: &LossVector, k: usize) -> Result<VariantWeights, ObjectiveError> {
    let m = losses.len();
    if k == 0 || k > m {
        return Err(ObjectiveError::BadK { k, m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        losses.values()[a]
            .partial_cmp(&losses.values()[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut w = vec![0.0; m];
    for &i in order.iter().take(k) {
        w[i] = 1.0 / k as f64;
    }
    Ok(VariantWeights(w))
}

/// Contiguous partition of `0..m` into `2^(depth-1)` sets by recursive
/// halving; uneven halves split as ceil/floor, empty leaves dropped.
pub fn dac_partition(m: usize, depth: usize) -> Vec<std::ops::Range<usize>> {
    let mut sets = vec![0..m];
    for _ in 1..depth {
        let mut next = Vec::with_capacity(sets.len() * 2);
        for set in sets {
            let size = set.end - set.start;
            if size <= 1 {
                next.push(set);
                continue;
            }
            let mid = set.start + size.div_ceil(2);
            next.push(set.start..mid);
            next.push(mid..set.end);
        }
        sets = next;
    }
    sets
}

/// Maximum DAC depth for `m` hypotheses: ceil(log2 m) + 1.
pub fn dac_max_depth(m: usize) -> usize {
    ceil_log2(m) + 1
}

fn ceil_log2(m: usize) -> usize {
    debug_assert!(m >= 1);
    (usize::BITS - (m - 1).leading_zeros()) as usize
}

/// Weight 1/|mSet| on every member of the partition set containing the
/// global argmin hypothesis, 0 elsewhere (mean loss over that set).
pub fn dac_weights(losses: &LossVector, depth: usize) -> Result<VariantWeights, ObjectiveError> {
    let m = losses.len();
    let max = dac_max_depth(m);
    if depth == 0 || depth > max {
        return Err(ObjectiveError::BadDepth { depth, max });
    }
    let winner = losses.argmin();
    let sets = dac_partition(m, depth);
    let m_set = sets
        .into_iter()
        .find(|s| s.contains(&winner))
        .expect("partition covers 0..m");
    let share = 1.0 / (m_set.end - m_set.start) as f64;
    let mut w = vec![0.0; m];
    for i in m_set {
        w[i] = share;
    }
    Ok(VariantWeights(w))
}

/// EWTA anneal: k = max(1, M >> floor(iter/interval)), halving every
/// `interval` iterations down to 1.
pub fn ewta_k_schedule(iter: usize, m: usize, interval: usize) -> usize {
    assert!(interval >= 1, "interval must be >= 1");
    let shift = (iter / interval).min(usize::BITS as usize - 1);
    (m >> shift).max(1)
}

/// DAC stage: depth = min(1 + floor(iter/interval), max depth).
pub fn dac_depth_schedule(iter: usize, m: usize, interval: usize) -> usize {
    assert!(interval >= 1, "interval must be >= 1");
    (1 + iter / interval).min(dac_max_depth(m))
}

/// Split schedule for DAC training: depth starts at 1 and increments every
/// `split_interval` iterations, capped at the depth where sets are singletons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DacSchedule {
    pub split_interval: usize,
    pub max_depth: usize,
}

impl DacSchedule {
    pub fn new(split_interval: usize, m: usize) -> Self {
        Self {
            split_interval,
            max_depth: dac_max_depth(m),
        }
    }

    pub fn current(&self, iter: usize) -> usize {
        (1 + iter / self.split_interval).min(self.max_depth)
    }
}

/// The four WTA variants, with their schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Wta,
    Rwta,
    Ewta,
    Dac,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::Wta,
        ObjectiveKind::Rwta,
        ObjectiveKind::Ewta,
        ObjectiveKind::Dac,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Wta => "wta",
            ObjectiveKind::Rwta => "rwta",
            ObjectiveKind::Ewta => "ewta",
            ObjectiveKind::Dac => "dac",
        }
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wta" => Ok(ObjectiveKind::Wta),
            "rwta" => Ok(ObjectiveKind::Rwta),
            "ewta" => Ok(ObjectiveKind::Ewta),
            "dac" => Ok(ObjectiveKind::Dac),
            other => Err(format!(
                "unknown objective '{other}' (expected wta, rwta, ewta or dac)"
            )),
        }
    }
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A variant plus its schedule parameters, resolving weights per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    /// Residual weight for RWTA non-winners.
    pub eps: f64,
    /// Iterations between EWTA halvings / DAC splits.
    pub split_interval: usize,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, eps: f64, split_interval: usize) -> Self {
        Self {
            kind,
            eps,
            split_interval,
        }
    }

    /// Weights for the given losses at training iteration `iter`.
    pub fn weights_at(&self, losses: &LossVector, iter: usize) -> VariantWeights {
        let m = losses.len();
        match self.kind {
            ObjectiveKind::Wta => wta_weights(losses),
            ObjectiveKind::Rwta => rwta_weights(losses, self.eps).expect("validated eps"),
            ObjectiveKind::Ewta => {
                let k = ewta_k_schedule(iter, m, self.split_interval);
                ewta_weights(losses, k).expect("schedule yields valid k")
            }
            ObjectiveKind::Dac => {
                let depth = dac_depth_schedule(iter, m, self.split_interval);
                dac_weights(losses, depth).expect("schedule yields valid depth")
            }
        }
    }
}

impl Default for Objective {
    fn default() -> Self {
        Self {
            kind: ObjectiveKind::Dac,
            eps: 0.05,
            split_interval: 2000,
        }
    }
}
