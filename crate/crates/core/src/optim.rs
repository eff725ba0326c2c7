//! Adam with an exponentially decaying learning rate.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub lr0: f64,
    /// Fraction of `lr0` reached at `total_steps`.
    pub decay_target_frac: f64,
    pub total_steps: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr0: 5e-4, decay_target_frac: 0.1, total_steps: 5000, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    /// `lr0 * decay_target_frac^(step / total_steps)`.
    pub fn lr(&self, step: u64) -> f64 {
        let frac = step as f64 / self.total_steps.max(1) as f64;
        self.lr0 * math::powf(self.decay_target_frac, frac)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self { config, m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }

    /// Learning rate used by the next update.
    pub fn lr(&self) -> f64 {
        self.config.lr(self.step)
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch("adam parameter and gradient lengths"));
        }
        let c = self.config;
        let lr = self.lr();
        self.step += 1;
        let bc1 = 1.0 - math::powf(c.beta1, self.step as f64);
        let bc2 = 1.0 - math::powf(c.beta2, self.step as f64);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (math::sqrt(v_hat) + c.eps);
        }
        Ok(())
    }
}
