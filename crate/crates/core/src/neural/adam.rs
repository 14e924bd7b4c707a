use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.lr > 0.0 && (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: i32,
    m: Parameters,
    v: Parameters,
}

impl Adam {
    pub fn new(config: AdamConfig, like: &Parameters) -> Self {
        Self {
            config,
            step: 0,
            m: like.zeros_like(),
            v: like.zeros_like(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, params: &mut Parameters, grads: &Parameters) {
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in tensors {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}
