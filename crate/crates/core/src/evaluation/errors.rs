use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView3, Axis};

use crate::{Error, Result};

/// Relative errors are undefined near calm conditions; cells whose observed
/// speed is below this many m/s are excluded by default.
pub const RELATIVE_ERROR_FLOOR: f64 = 0.1;

/// Signed errors `[t][row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorArray {
    pub errors: Array3<f64>,
    /// Hour index of each step.
    pub t_indices: Vec<usize>,
}

impl ErrorArray {
    pub fn new(errors: Array3<f64>, t_indices: Vec<usize>) -> Result<Self> {
        if errors.len_of(Axis(0)) != t_indices.len() {
            return Err(Error::shape(
                "error_array",
                format!("{} steps but {} time indices", errors.len_of(Axis(0)), t_indices.len()),
            ));
        }
        if let Some((i, &v)) = errors.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation { index: i, value: v });
        }
        Ok(Self { errors, t_indices })
    }

    /// `observed − predicted`.
    pub fn from_forecasts(
        observed: ArrayView3<f64>,
        predicted: ArrayView3<f64>,
        t_indices: Vec<usize>,
    ) -> Result<Self> {
        if observed.dim() != predicted.dim() {
            return Err(Error::shape(
                "error_array",
                format!("observed {:?} vs predicted {:?}", observed.dim(), predicted.dim()),
            ));
        }
        Self::new(&observed - &predicted, t_indices)
    }

    pub fn t_len(&self) -> usize {
        self.errors.len_of(Axis(0))
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        let (_, h, w) = self.errors.dim();
        (h, w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mse,
    Mae,
}

impl Metric {
    fn apply(self, e: f64) -> f64 {
        match self {
            Metric::Mse => e * e,
            Metric::Mae => e.abs(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "MSE",
            Metric::Mae => "MAE",
        }
    }
}

/// Sequence: spatial mean of the metric at each step. Matrix: temporal mean
/// at each location.
pub fn error_sequence_and_matrix(errs: &ErrorArray, metric: Metric) -> Result<(Array1<f64>, Array2<f64>)> {
    if errs.errors.is_empty() {
        return Err(Error::Input("empty error array".into()));
    }
    let m = errs.errors.mapv(|e| metric.apply(e));
    let sequence = m
        .axis_iter(Axis(0))
        .map(|f| f.sum() / f.len() as f64)
        .collect::<Array1<f64>>();
    let matrix = m.mean_axis(Axis(0)).expect("nonempty");
    Ok((sequence, matrix))
}

/// Mean of the metric over every cell; equals the mean of both the sequence
/// and the matrix.
pub fn grand_mean(errs: &ErrorArray, metric: Metric) -> f64 {
    errs.errors.iter().map(|&e| metric.apply(e)).sum::<f64>() / errs.errors.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub max: f64,
    pub min: f64,
    /// Lower of the two middle values for even counts.
    pub median: f64,
    pub mean: f64,
    /// Sample (`n − 1`) standard deviation; zero for a single value.
    pub standard_deviation: f64,
}

pub fn summarize(values: &[f64]) -> Result<ErrorSummary> {
    if values.is_empty() {
        return Err(Error::Input("cannot summarize an empty array".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation {
            index: i,
            value: values[i],
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ErrorSummary {
        max: sorted[n - 1],
        min: sorted[0],
        median: sorted[(n - 1) / 2],
        mean,
        standard_deviation: sd,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeErrors {
    pub values: Vec<f64>,
    /// Cells dropped because the observed value was below the floor.
    pub excluded: usize,
}

/// `|error| / observed` over every cell with `observed ≥ floor`.
pub fn relative_errors(errs: &ErrorArray, observed: ArrayView3<f64>, floor: f64) -> Result<RelativeErrors> {
    if !(floor > 0.0) {
        return Err(Error::Input(format!(
            "relative-error floor must be positive, got {floor}"
        )));
    }
    if observed.dim() != errs.errors.dim() {
        return Err(Error::shape(
            "relative_errors",
            format!("observed {:?} vs errors {:?}", observed.dim(), errs.errors.dim()),
        ));
    }
    let mut values = Vec::with_capacity(observed.len());
    let mut excluded = 0;
    for (&e, &o) in errs.errors.iter().zip(observed.iter()) {
        if o >= floor {
            values.push(e.abs() / o);
        } else {
            excluded += 1;
        }
    }
    if values.is_empty() {
        return Err(Error::InsufficientData(format!(
            "all {excluded} cells fall below the floor {floor}"
        )));
    }
    Ok(RelativeErrors { values, excluded })
}

/// Quantiles by linear interpolation between order statistics:
/// position `q·(n − 1)` in the sorted sample.
pub fn quantiles(values: &[f64], qs: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Input("no values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    qs.iter()
        .map(|&q| {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Input(format!("quantile level {q} outside [0, 1]")));
            }
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
        })
        .collect()
}

/// Percentage by which `model_value` undercuts `reference_value`. With
/// `as_rmse` both inputs are MSEs and the comparison is on their roots.
pub fn improvement_pct(model_value: f64, reference_value: f64, as_rmse: bool) -> Result<f64> {
    if !(reference_value > 0.0) {
        return Err(Error::Input(format!(
            "reference value must be positive, got {reference_value}"
        )));
    }
    if !(model_value >= 0.0) {
        return Err(Error::Input(format!(
            "model value must be nonnegative, got {model_value}"
        )));
    }
    Ok(if as_rmse {
        100.0 * (1.0 - model_value.sqrt() / reference_value.sqrt())
    } else {
        100.0 * (1.0 - model_value / reference_value)
    })
}

/// Per-location temporal mean and sample standard deviation.
pub fn per_location_error_moments(errs: &ErrorArray) -> Result<(Array2<f64>, Array2<f64>)> {
    let t = errs.t_len();
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "moments need at least 2 steps, got {t}"
        )));
    }
    let mean = errs.errors.mean_axis(Axis(0)).expect("nonempty");
    let mut ss = Array2::<f64>::zeros(mean.dim());
    for f in errs.errors.axis_iter(Axis(0)) {
        ss.zip_mut_with(&(&f - &mean), |s, d| *s += d * d);
    }
    let sd = ss.mapv(|s| (s / (t - 1) as f64).sqrt());
    Ok((mean, sd))
}

/// Per-location mean training error, added to later predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCorrection {
    pub mean_training_error: Array2<f64>,
}

pub fn fit_bias(training: &ErrorArray) -> Result<BiasCorrection> {
    if training.t_len() == 0 {
        return Err(Error::Input("no training errors".into()));
    }
    Ok(BiasCorrection {
        mean_training_error: training.errors.mean_axis(Axis(0)).expect("nonempty"),
    })
}

/// Adds the correction to every step of `predictions` (`[t][row][col]`).
pub fn apply_bias(predictions: ArrayView3<f64>, bc: &BiasCorrection) -> Result<Array3<f64>> {
    let (_, h, w) = predictions.dim();
    if (h, w) != bc.mean_training_error.dim() {
        return Err(Error::shape(
            "apply_bias",
            format!("predictions {h}x{w} vs correction {:?}", bc.mean_training_error.dim()),
        ));
    }
    Ok(&predictions + &bc.mean_training_error.view().insert_axis(Axis(0)))
}

pub(crate) fn mean_and_sd(xs: ArrayView1<f64>) -> (f64, f64) {
    let n = xs.len() as f64;
    let first = xs[0];
    if xs.iter().all(|&v| v == first) {
        return (first, 0.0);
    }
    let mean = xs.sum() / n;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn arr(errors: Array3<f64>) -> ErrorArray {
        let t = errors.len_of(Axis(0));
        ErrorArray::new(errors, (0..t).collect()).unwrap()
    }

    #[test]
    fn constant_errors() {
        let e = arr(Array3::from_elem((3, 2, 2), 2.0));
        let (s, m) = error_sequence_and_matrix(&e, Metric::Mse).unwrap();
        assert!(s.iter().chain(m.iter()).all(|&v| v == 4.0));
        let (s, m) = error_sequence_and_matrix(&e, Metric::Mae).unwrap();
        assert!(s.iter().chain(m.iter()).all(|&v| v == 2.0));
    }

    #[test]
    fn single_step_sequence_is_matrix_mean() {
        let e = arr(array![[[1.0, -2.0], [3.0, 0.0]]]);
        let (s, m) = error_sequence_and_matrix(&e, Metric::Mse).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], m.mean().unwrap());
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            (s.max, s.min, s.median, s.mean, s.standard_deviation),
            (3.0, 1.0, 2.0, 2.0, 1.0)
        );
        let c = summarize(&[0.7; 5]).unwrap();
        assert_eq!((c.max, c.min, c.median, c.standard_deviation), (0.7, 0.7, 0.7, 0.0));
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn relative_error_examples() {
        let e = arr(array![[[0.5, 0.0]], [[1.0, 0.2]]]);
        let obs = array![[[2.0, 3.0]], [[0.05, 1.0]]];
        let r = relative_errors(&e, obs.view(), RELATIVE_ERROR_FLOOR).unwrap();
        assert_eq!(r.values, vec![0.25, 0.0, 0.2]);
        assert_eq!(r.excluded, 1);
        assert!(relative_errors(&e, obs.view(), 0.0).is_err());
        assert!(relative_errors(&e, (obs * 0.0).view(), 0.1).is_err());
    }

    #[test]
    fn quantile_interpolation() {
        let q = quantiles(&[4.0, 1.0, 3.0, 2.0], &[0.0, 0.5, 1.0, 0.25]).unwrap();
        assert_eq!(q, vec![1.0, 2.5, 4.0, 1.75]);
        assert!(quantiles(&[1.0], &[1.5]).is_err());
    }

    #[test]
    fn improvement_examples() {
        assert!((improvement_pct(0.9384, 1.7726, true).unwrap() - 27.24).abs() < 0.01);
        assert!((improvement_pct(0.7279, 0.9911, false).unwrap() - 26.56).abs() < 0.01);
        assert_eq!(improvement_pct(1.3, 1.3, true).unwrap(), 0.0);
        assert!(improvement_pct(1.0, 0.0, false).is_err());
    }

    #[test]
    fn bias_shift() {
        let e = arr(Array3::from_elem((4, 2, 3), 0.5));
        let bc = fit_bias(&e).unwrap();
        let preds = Array3::from_elem((2, 2, 3), 1.0);
        assert!(apply_bias(preds.view(), &bc).unwrap().iter().all(|&v| v == 1.5));
        assert!(apply_bias(Array3::zeros((1, 3, 3)).view(), &bc).is_err());
    }

    #[test]
    fn moments_of_constant_error() {
        let e = arr(Array3::from_elem((5, 1, 2), -0.3));
        let (m, s) = per_location_error_moments(&e).unwrap();
        assert!(m.iter().all(|&v| (v + 0.3).abs() < 1e-15));
        assert!(s.iter().all(|&v| v < 1e-15));
        assert!(per_location_error_moments(&arr(Array3::zeros((1, 1, 1)))).is_err());
    }
}
