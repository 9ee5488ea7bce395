//! Second-stage mixture over the M hypotheses: component means are the
//! hypotheses, weights come from assignment logits (conditional models) or
//! empirical win frequencies (toy fits), and the shared isotropic sigma is
//! fit by held-out likelihood over a log-spaced grid.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::learn::softmax;

/// Isotropic Gaussian mixture with the hypotheses as component means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub means: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub sigma: f64,
}

/// Where the mixture weights come from.
#[derive(Debug, Clone)]
pub enum MixtureWeights {
    /// Softmax of the second-stage head's logits.
    Logits(Vec<f64>),
    /// Normalized empirical win counts.
    Counts(Vec<f64>),
}

impl MixtureModel {
    /// Average log-likelihood of `points` under the mixture.
    pub fn mean_log_likelihood(&self, points: &[Vec<f64>]) -> f64 {
        let d = self.means[0].len() as f64;
        let log_norm = -0.5 * d * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).ln();
        let mut total = 0.0;
        for x in points {
            let mut terms: Vec<f64> = Vec::with_capacity(self.means.len());
            for (mu, &w) in self.means.iter().zip(&self.weights) {
                if w > 0.0 {
                    let ss: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                    terms.push(w.ln() + log_norm - ss / (2.0 * self.sigma * self.sigma));
                }
            }
            let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            total += max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        }
        total / points.len() as f64
    }
}

/// Log-spaced grid for the sigma search.
pub fn log_spaced_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (ll + (lh - ll) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Fit the mixture: weights from logits or counts, sigma by maximizing the
/// held-out likelihood over the grid (first grid point wins ties).
pub fn fit_mixture(
    hypotheses: &[Vec<f64>],
    weights: MixtureWeights,
    heldout: &[Vec<f64>],
    sigma_grid: &[f64],
) -> Result<MixtureModel, EvalError> {
    if hypotheses.is_empty() {
        return Err(EvalError::Empty("mixture needs at least one hypothesis"));
    }
    if heldout.is_empty() || sigma_grid.is_empty() {
        return Err(EvalError::Empty("sigma fit needs held-out points and a grid"));
    }
    let m = hypotheses.len();
    let weights = match weights {
        MixtureWeights::Logits(logits) => {
            if logits.len() != m {
                return Err(EvalError::DimensionMismatch);
            }
            softmax(&logits)
        }
        MixtureWeights::Counts(counts) => {
            if counts.len() != m {
                return Err(EvalError::DimensionMismatch);
            }
            if counts.iter().any(|&c| c < 0.0 || !c.is_finite()) {
                return Err(EvalError::BadWeights);
            }
            let total: f64 = counts.iter().sum();
            if total <= 0.0 {
                return Err(EvalError::BadWeights);
            }
            counts.iter().map(|&c| c / total).collect()
        }
    };

    let mut best = MixtureModel {
        means: hypotheses.to_vec(),
        weights,
        sigma: sigma_grid[0],
    };
    let mut best_ll = f64::NEG_INFINITY;
    for &sigma in sigma_grid {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(EvalError::BadParam("sigma grid must be positive"));
        }
        let candidate = MixtureModel {
            sigma,
            ..best.clone()
        };
        let ll = candidate.mean_log_likelihood(heldout);
        if ll > best_ll {
            best_ll = ll;
            best = candidate;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{sample_multimodal, seeded_rng, ModeSpec};

    #[test]
    fn one_hot_and_uniform_weights() {
        let hyps = vec![vec![0.0, 0.0], vec![5.0, 5.0]];
        let held = vec![vec![0.1, 0.0]];
        let grid = [0.5, 1.0];
        let m = fit_mixture(
            &hyps,
            MixtureWeights::Logits(vec![100.0, 0.0]),
            &held,
            &grid,
        )
        .unwrap();
        assert!(m.weights[0] > 0.9999 && m.weights[1] < 1e-4);

        let m = fit_mixture(&hyps, MixtureWeights::Logits(vec![0.7, 0.7]), &held, &grid).unwrap();
        assert!((m.weights[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frequency_weights_recover_bimodal_split() {
        let modes = vec![
            ModeSpec::new(vec![-8.0, 0.0], 0.4, 0.7),
            ModeSpec::new(vec![8.0, 0.0], 0.4, 0.3),
        ];
        let mut rng = seeded_rng(23);
        let samples = sample_multimodal(&modes, 10_000, &mut rng).unwrap();
        // hypotheses sit at the true means; counts from nearest assignment
        let hyps = vec![vec![-8.0, 0.0], vec![8.0, 0.0]];
        let mut counts = [0.0f64; 2];
        for s in &samples {
            let idx = usize::from(s[0] > 0.0);
            counts[idx] += 1.0;
        }
        let m = fit_mixture(
            &hyps,
            MixtureWeights::Counts(counts.to_vec()),
            &samples,
            &log_spaced_grid(0.05, 5.0, 30),
        )
        .unwrap();
        assert!((m.weights[0] - 0.7).abs() < 0.05, "w0 = {}", m.weights[0]);
        assert!((m.weights[1] - 0.3).abs() < 0.05);
        // fitted sigma close to the generating sigma
        assert!(m.sigma > 0.25 && m.sigma < 0.6, "sigma = {}", m.sigma);
    }

    #[test]
    fn sigma_grid_picks_likelihood_maximizer() {
        let hyps = vec![vec![0.0]];
        let mut rng = seeded_rng(5);
        let samples =
            sample_multimodal(&[ModeSpec::new(vec![0.0], 1.0, 1.0)], 5_000, &mut rng).unwrap();
        let m = fit_mixture(
            &hyps,
            MixtureWeights::Counts(vec![1.0]),
            &samples,
            &log_spaced_grid(0.1, 10.0, 40),
        )
        .unwrap();
        assert!((m.sigma - 1.0).abs() < 0.15, "sigma = {}", m.sigma);
    }

    #[test]
    fn rejects_bad_inputs() {
        let hyps = vec![vec![0.0]];
        let held = vec![vec![0.0]];
        assert!(matches!(
            fit_mixture(&hyps, MixtureWeights::Counts(vec![0.0]), &held, &[1.0]),
            Err(EvalError::BadWeights)
        ));
        assert!(matches!(
            fit_mixture(&hyps, MixtureWeights::Logits(vec![0.0, 1.0]), &held, &[1.0]),
            Err(EvalError::DimensionMismatch)
        ));
    }
}
