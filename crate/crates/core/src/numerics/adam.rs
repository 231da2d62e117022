use serde::{Deserialize, Serialize};

use super::tensor::{Real, Tensor};
use super::NumericsError;

/// Adam hyperparameters. Defaults: lr 0.001, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter first/second moment accumulators plus the step counter.
pub struct AdamState<T> {
    config: AdamConfig,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, param_shapes: &[&[usize]]) -> Self {
        AdamState {
            config,
            first_moment: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            second_moment: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Bias-corrected Adam update applied in place across all parameters.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<T>],
        grads: &[&Tensor<T>],
    ) -> Result<(), NumericsError> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "adam-step",
                details: format!(
                    "param/grad/state counts differ: {} / {} / {}",
                    params.len(),
                    grads.len(),
                    self.first_moment.len()
                ),
            });
        }
        self.begin_step();
        for (i, (param, grad)) in params.iter_mut().zip(grads).enumerate() {
            self.update_param(i, param, grad)?;
        }
        Ok(())
    }

    /// Advance the step counter. Pair with [`AdamState::update_param`] for
    /// callers that visit parameters one at a time.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Update one parameter under the current step count.
    pub fn update_param(
        &mut self,
        index: usize,
        param: &mut Tensor<T>,
        grad: &Tensor<T>,
    ) -> Result<(), NumericsError> {
        let m = &mut self.first_moment[index];
        let v = &mut self.second_moment[index];
        if param.shape() != grad.shape() || param.shape() != m.shape() {
            return Err(NumericsError::ShapeMismatch {
                op: "adam-step",
                details: format!(
                    "parameter {index}: param {:?}, grad {:?}, moments {:?}",
                    param.shape(),
                    grad.shape(),
                    m.shape()
                ),
            });
        }
        let b1 = T::from_f64(self.config.beta1);
        let b2 = T::from_f64(self.config.beta2);
        let lr = T::from_f64(self.config.lr);
        let eps = T::from_f64(self.config.epsilon);
        let one = T::one();
        let bc1 = one - T::from_f64(self.config.beta1.powi(self.step as i32));
        let bc2 = one - T::from_f64(self.config.beta2.powi(self.step as i32));

        for i in 0..param.numel() {
            let g = grad.data()[i];
            let mi = b1 * m.data()[i] + (one - b1) * g;
            let vi = b2 * v.data()[i] + (one - b2) * g * g;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            param.data_mut()[i] = param.data()[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
