use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::with_lr(1e-3)
    }
}

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[Tensor<T>]) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self { m: zeros(), v: zeros(), step: 0 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Scalar>(
    params: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) {
    assert_eq!(params.len(), grads.len(), "one gradient per parameter tensor");
    state.step += 1;
    let t = state.step as i32;
    let b1 = T::from_f64_lossy(cfg.beta1);
    let b2 = T::from_f64_lossy(cfg.beta2);
    let c1 = T::from_f64_lossy(1.0 - cfg.beta1.powi(t));
    let c2 = T::from_f64_lossy(1.0 - cfg.beta2.powi(t));
    let lr = T::from_f64_lossy(cfg.learning_rate);
    let eps = T::from_f64_lossy(cfg.epsilon);
    let one = T::one();

    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        assert_eq!(p.shape(), g.shape(), "gradient shape differs from parameter");
        let (p, g, m, v) = (p.data_mut(), g.data(), m.data_mut(), v.data_mut());
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
