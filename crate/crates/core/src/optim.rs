//! Bias-corrected Adam with decoupled weight decay over any parameter set.

use crate::error::{Error, Result};

/// A collection of trainable tensors exposed as flat slices in a fixed
/// registry order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Copy of every tensor, concatenated in registry order.
    fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled decay rate; each step also applies `theta -= lr * wd * theta`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// First and second moment accumulators mirroring a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new<P: Parameters + ?Sized>(params: &P) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self {
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update of `params` from `grads`.
pub fn adam_step<P: Parameters + ?Sized>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    let grads = grads.tensors();
    let mut tensors = params.tensors_mut();
    if tensors.len() != grads.len() || tensors.len() != state.first.len() {
        return Err(Error::ShapeMismatch {
            context: "adam tensors",
            expected: state.first.len(),
            actual: tensors.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - config.beta1.powi(t);
    let correction2 = 1.0 - config.beta2.powi(t);
    let decay = config.learning_rate * config.weight_decay;
    for (k, theta) in tensors.iter_mut().enumerate() {
        let g = grads[k];
        let (m, v) = (&mut state.first[k], &mut state.second[k]);
        if theta.len() != g.len() || m.len() != g.len() {
            return Err(Error::ShapeMismatch {
                context: "adam tensor",
                expected: m.len(),
                actual: g.len(),
            });
        }
        for i in 0..g.len() {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            theta[i] -= decay * theta[i];
            theta[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
    Ok(())
}
