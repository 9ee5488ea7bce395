//! Direct hypothesis fitting for the toy experiments: M free vectors in the
//! output space trained against a stream of ground-truth samples, no network.

use rand::Rng;
use rand_distr::StandardNormal;

use super::adam::AdamState;
use super::loss::per_hypothesis_l2;
use super::LearnError;
use crate::objectives::Objective;
use crate::synthgen::{seeded_rng, SeededRng};

/// M free hypothesis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisParams {
    pub hypotheses: Vec<Vec<f64>>,
}

impl HypothesisParams {
    /// Gaussian init around a center point.
    pub fn init_gaussian(m: usize, center: &[f64], spread: f64, rng: &mut SeededRng) -> Self {
        let hypotheses = (0..m)
            .map(|_| {
                center
                    .iter()
                    .map(|&c| c + spread * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Self { hypotheses }
    }

    pub fn m(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn dim(&self) -> usize {
        self.hypotheses[0].len()
    }

    fn flat(&self) -> Vec<f64> {
        self.hypotheses.concat()
    }

    fn set_flat(&mut self, flat: &[f64]) {
        let d = self.dim();
        for (h, chunk) in self.hypotheses.iter_mut().zip(flat.chunks(d)) {
            h.copy_from_slice(chunk);
        }
    }
}

/// Outcome of a toy fit: final hypotheses plus the per-step winner tally.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: HypothesisParams,
    /// argmin hypothesis index at every step.
    pub winners: Vec<usize>,
}

impl FitReport {
    pub fn win_counts(&self) -> Vec<usize> {
        self.counts(0..self.winners.len())
    }

    /// Win counts over a step range (e.g. the final window).
    pub fn counts(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        let mut counts = vec![0usize; self.params.m()];
        for &w in &self.winners[range] {
            counts[w] += 1;
        }
        counts
    }
}

/// Stream-fit the hypotheses: draw a sample, compute per-hypothesis squared
/// distances, apply the variant weights and take one Adam step. Fully
/// deterministic given the seed.
pub fn fit_unconditional(
    init: HypothesisParams,
    mut sampler: impl FnMut(&mut SeededRng) -> Vec<f64>,
    objective: &Objective,
    lr: f64,
    steps: usize,
    seed: u64,
) -> Result<FitReport, LearnError> {
    assert!(steps >= 1, "steps must be >= 1");
    let mut rng = seeded_rng(seed);
    let mut params = init;
    let m = params.m();
    let d = params.dim();
    let mut flat = params.flat();
    let mut adam = AdamState::new(flat.len(), lr, 1.0);
    let mut winners = Vec::with_capacity(steps);
    let mut grads = vec![0.0; flat.len()];

    for iter in 0..steps {
        let target = sampler(&mut rng);
        assert_eq!(target.len(), d, "sampler dimension");
        let losses = per_hypothesis_l2(&params.hypotheses, &target, 1);
        winners.push(losses.argmin());
        let weights = objective.weights_at(&losses, iter);
        for h in 0..m {
            let w = weights.values()[h];
            for k in 0..d {
                grads[h * d + k] = w * 2.0 * (flat[h * d + k] - target[k]);
            }
        }
        adam.step(&mut flat, &grads)?;
        params.set_flat(&flat);
    }

    Ok(FitReport { params, winners })
}
