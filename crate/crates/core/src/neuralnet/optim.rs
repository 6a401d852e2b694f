//! RMSprop with optional Nesterov momentum.
//!
//! Plain update, elementwise with gradient `g`:
//!
//! ```text
//! r ← (1 − γ) g² + γ r
//! v ← α g / (√r + ε)
//! θ ← θ − v
//! ```
//!
//! With momentum `β > 0` the gradient is taken at the look-ahead point
//! `θ − β v` (see [`lookahead`]) and `v ← β v + α g / (√r + ε)`. At `β = 0`
//! the two coincide.

use super::model::Parameters;
use crate::{Error, Result};

/// Guard added to `√r`; `r` starts at zero.
pub const RMS_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// L2 penalty weight.
    pub lambda_reg: f64,
    /// Learning rate.
    pub alpha: f64,
    /// Decay of the squared-gradient average.
    pub gamma: f64,
    /// Nesterov momentum; 0 disables it.
    pub momentum_beta: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_reg: 0.15,
            alpha: 0.001,
            gamma: 0.9,
            momentum_beta: 0.0,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            early_stop_patience: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_reg >= 0.0) {
            return Err(Error::Config(format!("lambda {} must be nonnegative", self.lambda_reg)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha {} must be positive", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if !(self.momentum_beta >= 0.0) {
            return Err(Error::Config(format!("momentum {} is negative", self.momentum_beta)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Running squared-gradient average `r`, step buffer `v` and step count, one
/// vector per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub r: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(params: &Parameters) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        Self {
            r: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One update of a flat parameter vector.
pub fn rmsprop_update(r: &mut [f64], v: &mut [f64], theta: &mut [f64], grad: &[f64], config: &TrainConfig) {
    let (alpha, gamma, beta) = (config.alpha, config.gamma, config.momentum_beta);
    for k in 0..theta.len() {
        let g = grad[k];
        r[k] = (1.0 - gamma) * g * g + gamma * r[k];
        v[k] = beta * v[k] + alpha * g / (r[k].sqrt() + RMS_EPSILON);
        theta[k] -= v[k];
    }
}

/// Applies [`rmsprop_update`] to every tensor.
pub fn rmsprop_step(
    state: &mut OptimizerState,
    params: &mut Parameters,
    grads: &Parameters,
    config: &TrainConfig,
) -> Result<()> {
    let grads = grads.tensors();
    let mut theta = params.tensors_mut();
    if grads.len() != theta.len() || state.r.len() != theta.len() {
        return Err(Error::shape("rmsprop_step", "tensor count mismatch"));
    }
    for (k, th) in theta.iter_mut().enumerate() {
        let g = grads[k].data;
        if g.len() != th.len() || state.r[k].len() != th.len() || state.v[k].len() != th.len() {
            return Err(Error::shape(
                "rmsprop_step",
                format!("tensor {} size mismatch", grads[k].name),
            ));
        }
        rmsprop_update(&mut state.r[k], &mut state.v[k], th, g, config);
    }
    state.t += 1;
    Ok(())
}

/// The point `θ − β v` where the Nesterov gradient is evaluated.
pub fn lookahead(params: &Parameters, state: &OptimizerState, config: &TrainConfig) -> Parameters {
    let mut ahead = params.clone();
    if config.momentum_beta == 0.0 {
        return ahead;
    }
    for (th, v) in ahead.tensors_mut().into_iter().zip(&state.v) {
        for (x, v) in th.iter_mut().zip(v) {
            *x -= config.momentum_beta * v;
        }
    }
    ahead
}
