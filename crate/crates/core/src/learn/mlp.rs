//! Small dense feed-forward networks with hand-written reverse-mode
//! gradients: rectifier on hidden layers, identity (or rectifier, for trunk
//! feature blocks) on the output layer.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::synthgen::SeededRng;

/// One dense layer, weights stored row-major (out x in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

/// Dense multi-layer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
    /// Apply the rectifier to the final layer too (trunk feature blocks).
    output_relu: bool,
}

/// Post-activation values per layer, index 0 is the input.
#[derive(Debug, Clone)]
pub struct MlpCache {
    activations: Vec<Vec<f64>>,
}

/// Parameter gradients, same layout as the layers.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Mlp {
    pub fn new(layer_sizes: &[usize], output_relu: bool, rng: &mut SeededRng) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output size");
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let scale = (2.0 / fan_in as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Layer {
                    weights,
                    biases: vec![0.0; fan_out],
                    inputs: fan_in,
                    outputs: fan_out,
                }
            })
            .collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            output_relu,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn has_relu(&self, layer_idx: usize) -> bool {
        layer_idx + 1 < self.layers.len() || self.output_relu
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, MlpCache), LearnError> {
        if input.len() != self.input_dim() {
            return Err(LearnError::ShapeMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let x = activations.last().unwrap();
            let mut out = layer.biases.clone();
            for (o, row) in layer.weights.chunks_exact(layer.inputs).enumerate() {
                let mut acc = 0.0;
                for (w, xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                out[o] += acc;
            }
            if self.has_relu(k) {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(out);
        }
        let output = activations.last().unwrap().clone();
        Ok((output, MlpCache { activations }))
    }

    /// Exact reverse-mode gradients of the forward map. Returns parameter
    /// gradients and the gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, output_grad: &[f64]) -> (MlpGrads, Vec<f64>) {
        assert_eq!(output_grad.len(), self.output_dim(), "output grad shape");
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.activations[k];
            let y = &cache.activations[k + 1];
            if self.has_relu(k) {
                for (d, &yo) in delta.iter_mut().zip(y) {
                    if yo <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let mut gw = vec![0.0; layer.weights.len()];
            for (row, &d) in gw.chunks_exact_mut(layer.inputs).zip(&delta) {
                if d != 0.0 {
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g = d * xi;
                    }
                }
            }
            let gb = delta.clone();
            let mut prev = vec![0.0; layer.inputs];
            for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                if d != 0.0 {
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
            }
            grads.push((gw, gb));
            delta = prev;
        }
        grads.reverse();
        (MlpGrads { layers: grads }, delta)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "parameter count");
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
    }
}

impl MlpGrads {
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (gw, gb) in &self.layers {
            out.extend_from_slice(gw);
            out.extend_from_slice(gb);
        }
    }
}
