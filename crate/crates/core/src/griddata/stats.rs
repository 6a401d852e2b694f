//! Exploratory statistics of a grid series.

use ndarray::{Array1, Array2, Axis};

use super::GridSeries;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FieldStats {
    /// Per-location temporal mean.
    pub mean: Array2<f64>,
    /// Per-location sample sd (divisor n−1) over mean; `NaN` where the mean is zero.
    pub cv: Array2<f64>,
    /// Number of `NaN` entries in `cv`.
    pub cv_missing: usize,
    /// Mean over all locations at each time step.
    pub spatial_mean: Array1<f64>,
}

pub fn field_stats(series: &GridSeries) -> Result<FieldStats> {
    let t = series.t_len();
    if t < 2 {
        return Err(Error::InsufficientData(format!("{t} time steps, need at least 2")));
    }
    let v = series.values();
    let mean = v.mean_axis(Axis(0)).expect("nonempty");
    let sd = v.std_axis(Axis(0), 1.0);
    let mut cv_missing = 0;
    let cv = Array2::from_shape_fn(mean.dim(), |ix| {
        if mean[ix] == 0.0 {
            cv_missing += 1;
            f64::NAN
        } else {
            sd[ix] / mean[ix]
        }
    });
    let spatial_mean = v
        .axis_iter(Axis(0))
        .map(|f| f.mean().expect("nonempty field"))
        .collect();
    Ok(FieldStats {
        mean,
        cv,
        cv_missing,
        spatial_mean,
    })
}
