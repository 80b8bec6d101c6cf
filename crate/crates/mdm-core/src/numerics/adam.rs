//! Adam with bias correction. State lives beside the parameter tensor it
//! updates; the step counter is part of the state so resuming mid-run keeps
//! the correction terms right.

use super::Tensor2;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment accumulators plus the shared step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState { config, step: 0, mean: vec![0.0; len], var: vec![0.0; len] }
    }

    pub fn for_tensor(t: &Tensor2, config: AdamConfig) -> Self {
        AdamState::new(t.data().len(), config)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over raw slices. `param`, `grad` and the accumulators must
    /// all have the same length.
    pub fn update(&mut self, param: &mut [f64], grad: &[f64]) -> Result<()> {
        if param.len() != self.mean.len() || grad.len() != self.mean.len() {
            return Err(Error::shape(format!(
                "adam over {} params, {} grads, state of {}",
                param.len(),
                grad.len(),
                self.mean.len()
            )));
        }
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for i in 0..param.len() {
            let g = grad[i];
            self.mean[i] = c.beta1 * self.mean[i] + (1.0 - c.beta1) * g;
            self.var[i] = c.beta2 * self.var[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.mean[i] / bc1;
            let v_hat = self.var[i] / bc2;
            param[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}

/// Tensor-shaped wrapper around [`AdamState::update`]; shapes must match the
/// state the tensor was registered with.
pub fn adam_step(param: &mut Tensor2, grad: &Tensor2, state: &mut AdamState) -> Result<()> {
    if param.rows() != grad.rows() || param.cols() != grad.cols() {
        return Err(Error::shape(format!(
            "adam_step param {}x{} vs grad {}x{}",
            param.rows(),
            param.cols(),
            grad.rows(),
            grad.cols()
        )));
    }
    state.update(param.data_mut(), grad.data())
}
