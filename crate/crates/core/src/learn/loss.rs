//! Per-hypothesis regression losses and the ranking (score) loss.
//!
//! L2 convention: mean squared Euclidean distance per timestep. Reported
//! evaluation metrics use unsquared meters; only training losses square.

use crate::objectives::LossVector;

/// Mean squared Euclidean distance per timestep between each hypothesis and
/// the target. `preds` holds M hypotheses, each a flat vector matching
/// `target`; `steps` is the number of timesteps the vector spans.
pub fn per_hypothesis_l2(preds: &[Vec<f64>], target: &[f64], steps: usize) -> LossVector {
    assert!(steps >= 1, "steps must be >= 1");
    let values = preds
        .iter()
        .map(|p| {
            assert_eq!(p.len(), target.len(), "hypothesis/target shape");
            let ss: f64 = p.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
            ss / steps as f64
        })
        .collect();
    LossVector::new(values).expect("squared distances are valid losses")
}

/// Gradient of one hypothesis' mean-squared loss with respect to that
/// hypothesis: 2 (pred - target) / steps.
pub fn per_hypothesis_l2_grad(pred: &[f64], target: &[f64], steps: usize) -> Vec<f64> {
    pred.iter()
        .zip(target)
        .map(|(a, b)| 2.0 * (a - b) / steps as f64)
        .collect()
}

/// Numerically stable softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Ranking target: q = softmax(-d) over the per-hypothesis distances to the
/// ground truth. Invariant to adding a constant to all distances.
pub fn ioc_target_q(distances: &LossVector) -> Vec<f64> {
    let neg: Vec<f64> = distances.values().iter().map(|&d| -d).collect();
    softmax(&neg)
}

/// Cross-entropy between softmax(logits) and the target distribution `q`;
/// minimized exactly when softmax(logits) = q.
pub fn score_loss(logits: &[f64], q: &[f64]) -> f64 {
    assert_eq!(logits.len(), q.len(), "logits/target shape");
    let lse = log_sum_exp(logits);
    lse - logits.iter().zip(q).map(|(l, qi)| l * qi).sum::<f64>()
}

/// Gradient of [`score_loss`] with respect to the logits: softmax(logits) - q.
pub fn score_loss_grad_logits(logits: &[f64], q: &[f64]) -> Vec<f64> {
    softmax(logits)
        .into_iter()
        .zip(q)
        .map(|(p, qi)| p - qi)
        .collect()
}

/// Gradient of [`score_loss`] with respect to the distances the target q was
/// built from: d score / d d_i = q_i * (logit_i - sum_j q_j logit_j).
pub fn score_loss_grad_distances(logits: &[f64], q: &[f64]) -> Vec<f64> {
    let mean_logit: f64 = q.iter().zip(logits).map(|(qi, l)| qi * l).sum();
    q.iter()
        .zip(logits)
        .map(|(qi, l)| qi * (l - mean_logit))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_hypothesis_has_zero_loss() {
        let preds = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let l = per_hypothesis_l2(&preds, &[3.0, 4.0], 1);
        assert_eq!(l.values()[1], 0.0);
        assert!(l.values()[0] > 0.0);
    }

    #[test]
    fn squared_convention_3_4_5() {
        let l = per_hypothesis_l2(&[vec![3.0, 4.0]], &[0.0, 0.0], 1);
        assert_eq!(l.values()[0], 25.0);
    }

    #[test]
    fn mean_over_timesteps() {
        // two timesteps, displacement 1 at each -> mean squared = 1
        let l = per_hypothesis_l2(&[vec![1.0, 0.0, 1.0, 0.0]], &[0.0, 0.0, 0.0, 0.0], 2);
        assert_eq!(l.values()[0], 1.0);
    }

    #[test]
    fn l2_matches_direct_recomputation() {
        let preds = vec![vec![0.3, -0.7, 1.1], vec![2.0, 0.0, -1.0]];
        let target = [0.1, 0.1, 0.1];
        let l = per_hypothesis_l2(&preds, &target, 3);
        for (i, p) in preds.iter().enumerate() {
            let mut ss = 0.0;
            for (a, b) in p.iter().zip(&target) {
                ss += (a - b) * (a - b);
            }
            assert!((l.values()[i] - ss / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_uniform_when_equidistant() {
        let d = per_hypothesis_l2(
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]],
            &[0.0, 0.0],
            1,
        );
        let q = ioc_target_q(&d);
        for &qi in &q {
            assert!((qi - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q_favors_exact_hypothesis() {
        let d = LossVector::new(vec![0.0, 50.0, 50.0]).unwrap();
        let q = ioc_target_q(&d);
        assert!(q[0] > 0.999);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_softmax_worked_example() {
        let d = LossVector::new(vec![0.0, 1.0, 2.0]).unwrap();
        let q = ioc_target_q(&d);
        assert!((q[0] - 0.6652).abs() < 1e-4);
        assert!((q[1] - 0.2447).abs() < 1e-4);
        assert!((q[2] - 0.0900).abs() < 1e-4);
    }

    #[test]
    fn q_invariant_to_constant_shift() {
        let a = ioc_target_q(&LossVector::new(vec![0.3, 1.4, 0.9]).unwrap());
        let b = ioc_target_q(&LossVector::new(vec![10.3, 11.4, 10.9]).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn score_loss_at_optimum_is_entropy() {
        let q: Vec<f64> = vec![0.7, 0.2, 0.1];
        let logits: Vec<f64> = q.iter().map(|qi| qi.ln() + 3.0).collect();
        let entropy: f64 = -q.iter().map(|qi| qi * qi.ln()).sum::<f64>();
        assert!((score_loss(&logits, &q) - entropy).abs() < 1e-12);
    }

    #[test]
    fn uniform_case_is_log_m() {
        let m = 5;
        let q = vec![1.0 / m as f64; m];
        let logits = vec![0.0; m];
        assert!((score_loss(&logits, &q) - (m as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn score_loss_matches_direct_formula() {
        let logits = vec![0.2, -1.3, 0.7, 0.1];
        let q = vec![0.1, 0.2, 0.3, 0.4];
        let p = softmax(&logits);
        let direct: f64 = -q.iter().zip(&p).map(|(qi, pi)| qi * pi.ln()).sum::<f64>();
        assert!((score_loss(&logits, &q) - direct).abs() < 1e-12);
    }

    #[test]
    fn score_grads_match_finite_differences() {
        let logits = vec![0.4, -0.6, 1.1];
        let distances = vec![0.5, 0.2, 0.9];
        let h = 1e-6;
        let loss_of = |logits: &[f64], d: &[f64]| {
            let q = ioc_target_q(&LossVector::new(d.to_vec()).unwrap());
            score_loss(logits, &q)
        };
        let q = ioc_target_q(&LossVector::new(distances.clone()).unwrap());
        let gl = score_loss_grad_logits(&logits, &q);
        let gd = score_loss_grad_distances(&logits, &q);
        for i in 0..3 {
            let mut up = logits.clone();
            up[i] += h;
            let mut down = logits.clone();
            down[i] -= h;
            let fd = (loss_of(&up, &distances) - loss_of(&down, &distances)) / (2.0 * h);
            assert!((gl[i] - fd).abs() < 1e-6, "logit {i}");

            let mut up = distances.clone();
            up[i] += h;
            let mut down = distances.clone();
            down[i] -= h;
            let fd = (loss_of(&logits, &up) - loss_of(&logits, &down)) / (2.0 * h);
            assert!((gd[i] - fd).abs() < 1e-6, "distance {i}");
        }
    }
}
