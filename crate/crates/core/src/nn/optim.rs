//! Gradient-descent optimizers with a step-decay learning-rate schedule.

use serde::{Deserialize, Serialize};

use super::Param;
use crate::error::{Error, Result};

/// `lr(step) = initial * gamma^floor(step / decay_period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    pub gamma: f64,
    pub decay_period: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            initial: 0.005,
            gamma: 0.5,
            decay_period: usize::MAX,
        }
    }
}

impl LrSchedule {
    pub fn lr(&self, step: usize) -> f64 {
        let period = self.decay_period.max(1);
        self.initial * self.gamma.powi((step / period) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub struct Optimizer {
    pub kind: OptimizerKind,
    pub schedule: LrSchedule,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    updates: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, schedule: LrSchedule) -> Self {
        Optimizer {
            kind,
            schedule,
            first: Vec::new(),
            second: Vec::new(),
            updates: 0,
        }
    }

    /// Applies one update using the gradients stored in `params`.
    pub fn step(&mut self, params: &mut [&mut Param], step_index: usize) -> Result<()> {
        let lr = self.schedule.lr(step_index);
        match self.kind {
            OptimizerKind::Sgd => {
                for p in params.iter_mut() {
                    for (w, g) in p.value.data.iter_mut().zip(&p.grad) {
                        *w -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if self.first.is_empty() {
                    self.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
                    self.second = self.first.clone();
                }
                if self.first.len() != params.len()
                    || self.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len())
                {
                    return Err(Error::State("optimizer state does not match the parameter set".into()));
                }
                self.updates += 1;
                let c1 = 1.0 - beta1.powi(self.updates);
                let c2 = 1.0 - beta2.powi(self.updates);
                for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    for (((w, g), mi), vi) in p.value.data.iter_mut().zip(&p.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = beta1 * *mi + (1.0 - beta1) * g;
                        *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                        *w -= lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
                    }
                }
            }
        }
        if params.iter().any(|p| p.value.data.iter().any(|w| !w.is_finite())) {
            return Err(Error::Validation("non-finite weight after optimizer step".into()));
        }
        Ok(())
    }
}
