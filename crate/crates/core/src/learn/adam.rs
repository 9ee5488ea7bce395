//! Adam over a flat parameter vector, with exponential learning-rate decay
//! applied at epoch boundaries.

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Multiplied into `lr` by [`AdamState::end_epoch`].
    pub lr_gamma: f64,
}

impl AdamState {
    pub fn new(num_params: usize, lr: f64, lr_gamma: f64) -> Self {
        assert!(lr >= 0.0, "learning rate must be non-negative");
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_gamma,
        }
    }

    /// One bias-corrected Adam update in place. Non-finite gradients abort
    /// loudly rather than poisoning the parameters.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), LearnError> {
        assert_eq!(params.len(), self.first_moment.len(), "parameter count");
        assert_eq!(grads.len(), params.len(), "gradient count");
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(LearnError::NonFiniteGradient);
        }
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            self.second_moment[i] =
                self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bc1;
            let v_hat = self.second_moment[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }

    /// Exponential decay: lr <- lr * gamma.
    pub fn end_epoch(&mut self) {
        self.lr *= self.lr_gamma;
    }
}
