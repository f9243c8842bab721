//! AdamW: Adam with decoupled weight decay.

use super::tensor::Tensor2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-4,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates, aligned with a fixed parameter ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub step: u64,
    pub m: Vec<Tensor2>,
    pub v: Vec<Tensor2>,
}

impl AdamWState {
    pub fn new(shapes: &[(usize, usize)]) -> Self {
        AdamWState {
            step: 0,
            m: shapes.iter().map(|&(r, c)| Tensor2::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| Tensor2::zeros(r, c)).collect(),
        }
    }
}

/// One AdamW update over a flat parameter list.
///
/// Decay is decoupled: p <- p - lr*wd*p, applied alongside the
/// bias-corrected adaptive step.
pub fn adamw_step(
    cfg: &AdamWConfig,
    params: &mut [&mut Tensor2],
    grads: &[Tensor2],
    state: &mut AdamWState,
) {
    assert_eq!(params.len(), grads.len(), "param/grad count mismatch");
    assert_eq!(params.len(), state.m.len(), "param/state count mismatch");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let g = &grads[i];
        assert_eq!(p.shape(), g.shape(), "param/grad shape mismatch at {i}");
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        let pv = p.data_mut();
        for k in 0..pv.len() {
            let gk = g.data()[k];
            let mk = cfg.beta1 * m.data()[k] + (1.0 - cfg.beta1) * gk;
            let vk = cfg.beta2 * v.data()[k] + (1.0 - cfg.beta2) * gk * gk;
            m.data_mut()[k] = mk;
            v.data_mut()[k] = vk;
            let m_hat = mk / bc1;
            let v_hat = vk / bc2;
            pv[k] -= cfg.lr * cfg.weight_decay * pv[k];
            pv[k] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
