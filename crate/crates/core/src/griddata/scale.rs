//! Linear scaling by the training maximum.

use ndarray::{Array, ArrayView, Dimension};

use crate::{Error, Result};

/// Divisor `beta` mapping training values into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub beta: f64,
}

impl ScaleParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::DegenerateScale(beta));
        }
        Ok(Self { beta })
    }
}

/// `beta` is the largest value in the training data.
pub fn fit_scale<'a, D: Dimension>(train: ArrayView<'a, f64, D>) -> Result<ScaleParams> {
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training portion".into()));
    }
    let beta = train.iter().copied().fold(0.0f64, f64::max);
    ScaleParams::new(beta)
}

/// Values above the training maximum map above 1; that is expected on test data.
pub fn scale<D: Dimension>(x: ArrayView<f64, D>, s: &ScaleParams) -> Array<f64, D> {
    x.mapv(|v| v / s.beta)
}

pub fn unscale<D: Dimension>(y: ArrayView<f64, D>, s: &ScaleParams) -> Array<f64, D> {
    y.mapv(|v| v * s.beta)
}
