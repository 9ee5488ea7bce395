//! Trainable models: a shared rectified trunk feeding per-task heads.
//!
//! The conditional lane model predicts M trajectory hypotheses in anchor
//! (nt) coordinates, M auxiliary hypotheses in Cartesian (xy) coordinates,
//! and M ranking logits. The goal model used by the car-pedestrian protocol
//! predicts M joint-goal hypotheses plus assignment logits. Both stand in
//! for the heavy CNN/LSTM backbone of the full system; the objectives,
//! coordinate transforms and ranking they feed are backbone-agnostic.

use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpCache};
use super::LearnError;
use crate::synthgen::SeededRng;

/// Shared trunk plus independent linear heads on the trunk features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiHeadNet {
    trunk: Mlp,
    heads: Vec<Mlp>,
}

#[derive(Debug, Clone)]
pub struct NetCache {
    trunk: MlpCache,
    heads: Vec<MlpCache>,
}

impl MultiHeadNet {
    /// `trunk_layers` lists input and hidden sizes; each head maps the last
    /// trunk feature width to its own output dimension.
    pub fn new(trunk_layers: &[usize], head_dims: &[usize], rng: &mut SeededRng) -> Self {
        let trunk = Mlp::new(trunk_layers, true, rng);
        let feat = trunk.output_dim();
        let heads = head_dims
            .iter()
            .map(|&d| Mlp::new(&[feat, d], false, rng))
            .collect();
        Self { trunk, heads }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<Vec<f64>>, NetCache), LearnError> {
        let (feat, trunk_cache) = self.trunk.forward(input)?;
        let mut outputs = Vec::with_capacity(self.heads.len());
        let mut head_caches = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let (out, cache) = head.forward(&feat)?;
            outputs.push(out);
            head_caches.push(cache);
        }
        Ok((
            outputs,
            NetCache {
                trunk: trunk_cache,
                heads: head_caches,
            },
        ))
    }

    /// Backpropagate per-head output gradients; returns the flat parameter
    /// gradient aligned with [`MultiHeadNet::params_flat`].
    pub fn backward(&self, cache: &NetCache, head_grads: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(head_grads.len(), self.heads.len(), "one grad per head");
        let feat_dim = self.trunk.output_dim();
        let mut feat_grad = vec![0.0; feat_dim];
        let mut head_param_grads = Vec::with_capacity(self.heads.len());
        for ((head, hc), hg) in self.heads.iter().zip(&cache.heads).zip(head_grads) {
            let (grads, input_grad) = head.backward(hc, hg);
            for (f, g) in feat_grad.iter_mut().zip(input_grad) {
                *f += g;
            }
            head_param_grads.push(grads);
        }
        let (trunk_grads, _) = self.trunk.backward(&cache.trunk, &feat_grad);
        let mut flat = Vec::with_capacity(self.num_params());
        trunk_grads.flatten_into(&mut flat);
        for hg in &head_param_grads {
            hg.flatten_into(&mut flat);
        }
        flat
    }

    pub fn num_params(&self) -> usize {
        self.trunk.num_params() + self.heads.iter().map(Mlp::num_params).sum::<usize>()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.trunk.params_flat();
        for h in &self.heads {
            out.extend(h.params_flat());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "parameter count");
        let mut off = self.trunk.num_params();
        self.trunk.set_params_flat(&flat[..off]);
        for h in &mut self.heads {
            let n = h.num_params();
            h.set_params_flat(&flat[off..off + n]);
            off += n;
        }
    }

    /// Number of parameters belonging to the trunk (prefix of the flat
    /// layout); used to freeze the trunk in staged training.
    pub fn trunk_param_count(&self) -> usize {
        self.trunk.num_params()
    }

    pub fn head_param_count(&self, head: usize) -> usize {
        self.heads[head].num_params()
    }
}

/// Outputs of the lane model for one agent.
#[derive(Debug, Clone)]
pub struct AnchorOutputs {
    /// M hypotheses, each `2 * horizon` values ordered (n, l) per timestep.
    pub nt: Vec<Vec<f64>>,
    /// M hypotheses, each `2 * horizon` values ordered (x, y) per timestep.
    pub xy: Vec<Vec<f64>>,
    /// M ranking logits.
    pub logits: Vec<f64>,
}

/// Conditional lane model: nt head, auxiliary xy head and score head over a
/// shared trunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorModel {
    pub net: MultiHeadNet,
    pub hypotheses: usize,
    pub horizon: usize,
}

impl AnchorModel {
    pub fn new(
        input_dim: usize,
        trunk_hidden: &[usize],
        hypotheses: usize,
        horizon: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let mut trunk_layers = vec![input_dim];
        trunk_layers.extend_from_slice(trunk_hidden);
        let traj = hypotheses * horizon * 2;
        let net = MultiHeadNet::new(&trunk_layers, &[traj, traj, hypotheses], rng);
        Self {
            net,
            hypotheses,
            horizon,
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(AnchorOutputs, NetCache), LearnError> {
        let (mut outs, cache) = self.net.forward(input)?;
        let logits = outs.pop().unwrap();
        let xy = split_hypotheses(outs.pop().unwrap(), self.hypotheses);
        let nt = split_hypotheses(outs.pop().unwrap(), self.hypotheses);
        Ok((AnchorOutputs { nt, xy, logits }, cache))
    }

    pub fn backward(
        &self,
        cache: &NetCache,
        g_nt: &[Vec<f64>],
        g_xy: &[Vec<f64>],
        g_logits: &[f64],
    ) -> Vec<f64> {
        let head_grads = vec![
            g_nt.concat(),
            g_xy.concat(),
            g_logits.to_vec(),
        ];
        self.net.backward(cache, &head_grads)
    }
}

/// Goal model for the two-stage mixture protocol: M joint-goal hypotheses
/// plus assignment logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalModel {
    pub net: MultiHeadNet,
    pub hypotheses: usize,
    pub goal_dim: usize,
}

/// Outputs of the goal model for one scene.
#[derive(Debug, Clone)]
pub struct GoalOutputs {
    pub goals: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

impl GoalModel {
    pub fn new(
        input_dim: usize,
        trunk_hidden: &[usize],
        hypotheses: usize,
        goal_dim: usize,
        rng: &mut SeededRng,
    ) -> Self {
        let mut trunk_layers = vec![input_dim];
        trunk_layers.extend_from_slice(trunk_hidden);
        let net = MultiHeadNet::new(&trunk_layers, &[hypotheses * goal_dim, hypotheses], rng);
        Self {
            net,
            hypotheses,
            goal_dim,
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(GoalOutputs, NetCache), LearnError> {
        let (mut outs, cache) = self.net.forward(input)?;
        let logits = outs.pop().unwrap();
        let goals = split_hypotheses(outs.pop().unwrap(), self.hypotheses);
        Ok((GoalOutputs { goals, logits }, cache))
    }

    pub fn backward(&self, cache: &NetCache, g_goals: &[Vec<f64>], g_logits: &[f64]) -> Vec<f64> {
        self.net
            .backward(cache, &[g_goals.concat(), g_logits.to_vec()])
    }
}

fn split_hypotheses(flat: Vec<f64>, m: usize) -> Vec<Vec<f64>> {
    assert_eq!(flat.len() % m, 0, "head output divides into hypotheses");
    let d = flat.len() / m;
    flat.chunks(d).map(|c| c.to_vec()).collect()
}
