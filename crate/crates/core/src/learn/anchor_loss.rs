//! Combined training objective of the lane model: variant-weighted nt and
//! xy reconstruction terms, the two cross-coordinate regularizers, and the
//! ranking loss.
//!
//! total = W(nt losses) + W(xy losses)
//!       + lambda1 * L2(nt preds, xy preds converted to nt)
//!       + lambda2 * L2(xy preds, nt preds converted to xy)
//!       + CE(logits, q),   q = softmax(-d(nt preds, nt gt))
//!
//! Gradients flow through every differentiable path, including the nt<->xy
//! conversions (via their local Jacobians) and the ranking target q. The
//! variant weight vectors are selection masks and are held fixed, as in any
//! winner-takes-all scheme.

use super::encode::AnchorFrame;
use super::loss::{
    ioc_target_q, per_hypothesis_l2, score_loss, score_loss_grad_distances,
    score_loss_grad_logits,
};
use super::model::AnchorOutputs;
use crate::objectives::Objective;

/// Which loss terms are active. Mirrors the ablation cells: xy-only,
/// nt-only, nt+xy, nt+xy with regularizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub use_nt: bool,
    pub use_xy: bool,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), super::LearnError> {
        if !self.use_nt && !self.use_xy {
            return Err(super::LearnError::BadConfig(
                "at least one of the nt/xy heads must be active".into(),
            ));
        }
        if (self.lambda1 != 0.0 || self.lambda2 != 0.0) && !(self.use_nt && self.use_xy) {
            return Err(super::LearnError::BadConfig(
                "regularizers need both heads active".into(),
            ));
        }
        Ok(())
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            use_nt: true,
            use_xy: true,
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

/// Loss components; `total` is the weighted sum above with the lambdas
/// applied to the (unscaled) regularizer values stored here.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub nt: f64,
    pub xy: f64,
    pub reg_nt_from_xy: f64,
    pub reg_xy_from_nt: f64,
    pub score: f64,
}

/// Gradients with respect to the model outputs.
#[derive(Debug, Clone)]
pub struct OutputGrads {
    pub nt: Vec<Vec<f64>>,
    pub xy: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

/// Evaluate the objective and its gradients for one sample.
pub fn anchor_loss(
    outputs: &AnchorOutputs,
    gt_nt: &[f64],
    gt_xy: &[f64],
    frame: &AnchorFrame,
    config: &LossConfig,
    objective: &Objective,
    iter: usize,
) -> (LossBreakdown, OutputGrads) {
    let m = outputs.logits.len();
    let horizon = gt_nt.len() / 2;
    debug_assert_eq!(gt_xy.len(), gt_nt.len());

    let mut g_nt = vec![vec![0.0; gt_nt.len()]; m];
    let mut g_xy = vec![vec![0.0; gt_xy.len()]; m];
    let mut breakdown = LossBreakdown::default();

    // reconstruction terms, each head with its own winner selection
    let nt_losses = per_hypothesis_l2(&outputs.nt, gt_nt, horizon);
    if config.use_nt {
        let w = objective.weights_at(&nt_losses, iter);
        breakdown.nt = w.combine(&nt_losses);
        for (h, (pred, wi)) in outputs.nt.iter().zip(w.values()).enumerate() {
            if *wi != 0.0 {
                for (g, (p, t)) in g_nt[h].iter_mut().zip(pred.iter().zip(gt_nt)) {
                    *g += wi * 2.0 * (p - t) / horizon as f64;
                }
            }
        }
    }
    if config.use_xy {
        let xy_losses = per_hypothesis_l2(&outputs.xy, gt_xy, horizon);
        let w = objective.weights_at(&xy_losses, iter);
        breakdown.xy = w.combine(&xy_losses);
        for (h, (pred, wi)) in outputs.xy.iter().zip(w.values()).enumerate() {
            if *wi != 0.0 {
                for (g, (p, t)) in g_xy[h].iter_mut().zip(pred.iter().zip(gt_xy)) {
                    *g += wi * 2.0 * (p - t) / horizon as f64;
                }
            }
        }
    }

    // cross-coordinate regularizers, hypothesis m against hypothesis m
    let scale = 1.0 / (m * horizon) as f64;
    if config.lambda1 != 0.0 || config.lambda2 != 0.0 {
        for h in 0..m {
            for t in 0..horizon {
                let nt_p = &outputs.nt[h][2 * t..2 * t + 2];
                let xy_p = &outputs.xy[h][2 * t..2 * t + 2];

                // lambda1: nt head vs xy head pulled through the projection
                let (conv, jac) = frame.local_xy_to_nt(xy_p[0], xy_p[1]);
                let dn = nt_p[0] - conv.n;
                let dl = nt_p[1] - conv.l;
                breakdown.reg_nt_from_xy += scale * (dn * dn + dl * dl);
                if config.lambda1 != 0.0 {
                    let c = config.lambda1 * scale * 2.0;
                    g_nt[h][2 * t] += c * dn;
                    g_nt[h][2 * t + 1] += c * dl;
                    // d/d xy = -(dn * dn/dxy + dl * dl/dxy)
                    g_xy[h][2 * t] -= c * (dn * jac.dn_dx + dl * jac.dl_dx);
                    g_xy[h][2 * t + 1] -= c * (dn * jac.dn_dy + dl * jac.dl_dy);
                }

                // lambda2: xy head vs nt head pushed through the inverse map
                let ((cx, cy), jac) = frame.local_nt_to_xy(nt_p[0], nt_p[1]);
                let dx = xy_p[0] - cx;
                let dy = xy_p[1] - cy;
                breakdown.reg_xy_from_nt += scale * (dx * dx + dy * dy);
                if config.lambda2 != 0.0 {
                    let c = config.lambda2 * scale * 2.0;
                    g_xy[h][2 * t] += c * dx;
                    g_xy[h][2 * t + 1] += c * dy;
                    g_nt[h][2 * t] -= c * (dx * jac.dx_dn + dy * jac.dy_dn);
                    g_nt[h][2 * t + 1] -= c * (dx * jac.dx_dl + dy * jac.dy_dl);
                }
            }
        }
    }

    // ranking loss; q follows the primary head
    let (q_losses, q_from_nt) = if config.use_nt {
        (nt_losses, true)
    } else {
        (per_hypothesis_l2(&outputs.xy, gt_xy, horizon), false)
    };
    let q = ioc_target_q(&q_losses);
    breakdown.score = score_loss(&outputs.logits, &q);
    let g_logits = score_loss_grad_logits(&outputs.logits, &q);
    let g_dist = score_loss_grad_distances(&outputs.logits, &q);
    for h in 0..m {
        if g_dist[h] != 0.0 {
            let (preds, gt, grads) = if q_from_nt {
                (&outputs.nt[h], gt_nt, &mut g_nt[h])
            } else {
                (&outputs.xy[h], gt_xy, &mut g_xy[h])
            };
            for (g, (p, t)) in grads.iter_mut().zip(preds.iter().zip(gt)) {
                *g += g_dist[h] * 2.0 * (p - t) / horizon as f64;
            }
        }
    }

    breakdown.total = breakdown.nt
        + breakdown.xy
        + config.lambda1 * breakdown.reg_nt_from_xy
        + config.lambda2 * breakdown.reg_xy_from_nt
        + breakdown.score;

    (
        breakdown,
        OutputGrads {
            nt: g_nt,
            xy: g_xy,
            logits: g_logits,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, Polyline};
    use crate::objectives::{Objective, ObjectiveKind};

    fn frame() -> AnchorFrame {
        let anchor = Polyline::from_xy(&[[0.0, 0.0], [100.0, 0.0]]).unwrap();
        AnchorFrame::new(anchor, Point2::new(0.0, 0.0))
    }

    fn outputs(nt: Vec<Vec<f64>>, xy: Vec<Vec<f64>>, logits: Vec<f64>) -> AnchorOutputs {
        AnchorOutputs { nt, xy, logits }
    }

    fn dac() -> Objective {
        Objective::new(ObjectiveKind::Dac, 0.05, 2000)
    }

    #[test]
    fn consistent_heads_have_zero_regularizers() {
        // straight lane along +x: nt (n, l) = (0, 5) corresponds to xy (5, 0)
        let out = outputs(
            vec![vec![0.0, 5.0]],
            vec![vec![5.0, 0.0]],
            vec![0.0],
        );
        let (b, _) = anchor_loss(
            &out,
            &[0.0, 5.0],
            &[5.0, 0.0],
            &frame(),
            &LossConfig::default(),
            &dac(),
            0,
        );
        assert!(b.reg_nt_from_xy.abs() < 1e-12);
        assert!(b.reg_xy_from_nt.abs() < 1e-12);
        assert!(b.nt.abs() < 1e-12);
        assert!(b.xy.abs() < 1e-12);
    }

    #[test]
    fn offset_xy_head_pays_lambda2() {
        // nt (0,5) -> xy (5,0); xy head predicts (5,1): reg_xy = 1
        let out = outputs(vec![vec![0.0, 5.0]], vec![vec![5.0, 1.0]], vec![0.0]);
        let cfg = LossConfig {
            lambda1: 0.0,
            lambda2: 2.5,
            ..LossConfig::default()
        };
        let (b, _) = anchor_loss(&out, &[0.0, 5.0], &[5.0, 1.0], &frame(), &cfg, &dac(), 0);
        assert!((b.reg_xy_from_nt - 1.0).abs() < 1e-12);
        // xy reconstruction is exact, nt reconstruction is exact
        assert!((b.total - (2.5 * 1.0 + b.score)).abs() < 1e-12);
    }

    #[test]
    fn zero_lambdas_reduce_to_dac_terms_plus_score() {
        let out = outputs(
            vec![vec![0.3, 4.0], vec![-0.2, 6.0]],
            vec![vec![4.2, 0.4], vec![6.1, -0.3]],
            vec![0.2, -0.1],
        );
        let cfg = LossConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            ..LossConfig::default()
        };
        let (b, _) = anchor_loss(&out, &[0.0, 5.0], &[5.0, 0.0], &frame(), &cfg, &dac(), 0);
        assert!((b.total - (b.nt + b.xy + b.score)).abs() < 1e-12);
        assert!(b.nt >= 0.0 && b.xy >= 0.0 && b.score >= 0.0);
    }

    #[test]
    fn dac_at_max_depth_steps_like_wta() {
        // past the last split the DAC weights are winner-takes-all, so the
        // gradients (and hence one optimizer step) are bit-identical
        use crate::learn::AdamState;
        let out = outputs(
            vec![vec![0.3, 4.0], vec![-0.2, 6.0], vec![0.1, 5.2]],
            vec![vec![4.2, 0.4], vec![6.1, -0.3], vec![5.3, 0.2]],
            vec![0.2, -0.1, 0.05],
        );
        let cfg = LossConfig::default();
        let late_iter = 100 * 2000; // well past every split
        let (b_dac, g_dac) = anchor_loss(
            &out,
            &[0.0, 5.0],
            &[5.0, 0.0],
            &frame(),
            &cfg,
            &Objective::new(ObjectiveKind::Dac, 0.05, 2000),
            late_iter,
        );
        let (b_wta, g_wta) = anchor_loss(
            &out,
            &[0.0, 5.0],
            &[5.0, 0.0],
            &frame(),
            &cfg,
            &Objective::new(ObjectiveKind::Wta, 0.05, 2000),
            late_iter,
        );
        assert_eq!(b_dac, b_wta);
        assert_eq!(g_dac.nt, g_wta.nt);
        assert_eq!(g_dac.xy, g_wta.xy);
        assert_eq!(g_dac.logits, g_wta.logits);

        let flat: Vec<f64> = g_dac.nt.concat();
        let mut p1 = vec![0.5; flat.len()];
        let mut p2 = p1.clone();
        AdamState::new(flat.len(), 1e-3, 0.95)
            .step(&mut p1, &flat)
            .unwrap();
        AdamState::new(flat.len(), 1e-3, 0.95)
            .step(&mut p2, &g_wta.nt.concat())
            .unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn total_is_stated_weighted_sum() {
        let out = outputs(
            vec![vec![0.3, 4.0], vec![-0.2, 6.0]],
            vec![vec![4.2, 0.4], vec![6.1, -0.3]],
            vec![0.2, -0.1],
        );
        let cfg = LossConfig {
            lambda1: 0.7,
            lambda2: 1.3,
            ..LossConfig::default()
        };
        let (b, _) = anchor_loss(&out, &[0.0, 5.0], &[5.0, 0.0], &frame(), &cfg, &dac(), 0);
        let expect =
            b.nt + b.xy + 0.7 * b.reg_nt_from_xy + 1.3 * b.reg_xy_from_nt + b.score;
        assert!((b.total - expect).abs() < 1e-12);
    }
}
