//! Adam with decoupled weight decay, global-norm clipping, and a linear
//! warmup / linear decay schedule.

use crate::neural::{Gradients, OptimizerState, Precision, Weights};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-6,
            weight_decay: 0.01,
        }
    }
}

/// Linear warmup to `peak` over `warmup` steps, then linear decay that
/// reaches zero one step after the last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSchedule {
    pub peak: f64,
    pub warmup: u64,
    pub total: u64,
}

impl LinearSchedule {
    /// Rate for the 0-based step `step`.
    pub fn rate(&self, step: u64) -> f64 {
        if step < self.warmup {
            self.peak * (step + 1) as f64 / self.warmup as f64
        } else if self.total > self.warmup {
            self.peak * self.total.saturating_sub(step) as f64 / (self.total - self.warmup) as f64
        } else {
            self.peak
        }
    }
}

/// Scales `grads` so their global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if max_norm > 0.0 && norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub state: OptimizerState,
    /// Per-parameter decay mask (embeddings and weight matrices only).
    decay: Vec<bool>,
}

impl Adam {
    pub fn new(config: AdamConfig, weights: &Weights) -> Self {
        let n = weights.len();
        Adam {
            config,
            state: OptimizerState {
                step: 0,
                m: vec![0.0; n],
                v: vec![0.0; n],
            },
            decay: decay_mask(weights),
        }
    }

    /// Optimizer over a bare parameter vector with an explicit decay mask.
    pub fn with_mask(config: AdamConfig, decay: Vec<bool>) -> Self {
        let n = decay.len();
        Adam {
            config,
            state: OptimizerState {
                step: 0,
                m: vec![0.0; n],
                v: vec![0.0; n],
            },
            decay,
        }
    }

    pub fn from_state(config: AdamConfig, weights: &Weights, state: OptimizerState) -> Self {
        Adam {
            config,
            state,
            decay: decay_mask(weights),
        }
    }

    /// One update at learning rate `lr`. Values and moments are rounded to
    /// the weights' storage precision afterwards.
    pub fn step(&mut self, weights: &mut Weights, grads: &Gradients, lr: f64) {
        let precision = weights.config.precision;
        self.update(&mut weights.values, &grads.values, lr, precision);
    }

    pub fn update(&mut self, values: &mut [f64], grads: &[f64], lr: f64, precision: Precision) {
        assert_eq!(values.len(), self.decay.len());
        assert_eq!(grads.len(), self.decay.len());
        let c = self.config;
        self.state.step += 1;
        let t = self.state.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let OptimizerState { m, v, .. } = &mut self.state;
        for (idx, ((w, &g), (m, v))) in values
            .iter_mut()
            .zip(grads)
            .zip(m.iter_mut().zip(v.iter_mut()))
            .enumerate()
        {
            *m = precision.round(c.beta1 * *m + (1.0 - c.beta1) * g);
            *v = precision.round(c.beta2 * *v + (1.0 - c.beta2) * g * g);
            let update = (*m / bc1) / ((*v / bc2).sqrt() + c.eps);
            let mut next = *w - lr * update;
            if self.decay[idx] {
                next -= lr * c.weight_decay * *w;
            }
            *w = precision.round(next);
        }
    }
}

fn decay_mask(weights: &Weights) -> Vec<bool> {
    let mut mask = vec![false; weights.len()];
    for t in &weights.layout.tensors {
        if t.kind.decays() {
            mask[t.slot.range()].fill(true);
        }
    }
    mask
}
