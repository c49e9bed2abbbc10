use alloc::vec::Vec;

use super::Tensor;
use crate::error::{bail, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one pair of moment buffers per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> Result<Self> {
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            bail!(
                Config,
                "learning rate must be positive and finite, got {}",
                config.learning_rate
            );
        }
        let zeros = |t: &&Tensor| alloc::vec![0.0; t.len()];
        Ok(Self {
            config,
            step: 0,
            first: params.iter().map(zeros).collect(),
            second: params.iter().map(zeros).collect(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Applies one update from the parameters' gradient buffers. A missing
    /// buffer counts as a zero gradient. If any gradient is non-finite the
    /// whole step is skipped and neither parameters nor state change.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        if params.len() != self.first.len() {
            bail!(
                Shape,
                "optimizer tracks {} parameters, got {}",
                self.first.len(),
                params.len()
            );
        }
        for (i, p) in params.iter().enumerate() {
            if p.len() != self.first[i].len() {
                bail!(
                    Shape,
                    "parameter {i} has {} values, optimizer expects {}",
                    p.len(),
                    self.first[i].len()
                );
            }
            if p.grad().is_some_and(|g| g.iter().any(|v| !v.is_finite())) {
                return Err(Error::NonFiniteGradient { param: i });
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        for (i, p) in params.iter_mut().enumerate() {
            let grad = p
                .grad()
                .map_or_else(|| alloc::vec![0.0; p.len()], <[f64]>::to_vec);
            for ((m, v), g) in self.first[i]
                .iter_mut()
                .zip(self.second[i].iter_mut())
                .zip(&grad)
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
            }
            apply(
                p.values_mut(),
                &self.first[i],
                &self.second[i],
                learning_rate,
                c1,
                c2,
                epsilon,
            );
        }
        Ok(())
    }
}

fn apply(values: &mut [f64], m: &[f64], v: &[f64], lr: f64, c1: f64, c2: f64, eps: f64) {
    for ((x, m), v) in values.iter_mut().zip(m).zip(v) {
        *x -= lr * (m / c1) / (libm::sqrt(v / c2) + eps);
    }
}
