use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;

use super::errors::ErrorArray;
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 40;

/// Sample autocorrelation `Σ (x_t − x̄)(x_{t+k} − x̄) / Σ (x_t − x̄)²`.
pub fn acf(series: &[f64], lags: &[usize]) -> Result<Vec<f64>> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if series.len() <= max_lag + 1 {
        return Err(Error::InsufficientData(format!(
            "lag {max_lag} needs more than {} values, got {}",
            max_lag + 1,
            series.len()
        )));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(Error::Input("zero-variance series has no autocorrelation".into()));
    }
    Ok(lags
        .iter()
        .map(|&k| {
            if k == 0 {
                return 1.0;
            }
            (0..n - k).map(|t| dev[t] * dev[t + k]).sum::<f64>() / denom
        })
        .collect())
}

/// Autocorrelation of every location's error series, `[lag][row][col]`.
/// Locations with constant errors get NaN.
pub fn per_location_acf(errs: &ErrorArray, lags: &[usize]) -> Result<Array3<f64>> {
    let (h, w) = errs.grid_shape();
    let mut out = Array3::<f64>::from_elem((lags.len(), h, w), f64::NAN);
    for r in 0..h {
        for c in 0..w {
            let s: Vec<f64> = errs.errors.slice(ndarray::s![.., r, c]).to_vec();
            match acf(&s, lags) {
                Ok(v) => {
                    for (i, x) in v.into_iter().enumerate() {
                        out[[i, r, c]] = x;
                    }
                }
                Err(Error::Input(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Counts on `[-1, 1]` in bins of width 0.05; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub counts: [u64; HISTOGRAM_BINS],
}

impl Histogram {
    pub fn bin_edges() -> Vec<f64> {
        (0..=HISTOGRAM_BINS).map(|k| -1.0 + 0.05 * k as f64).collect()
    }

    fn add(&mut self, r: f64) {
        let k = (((r + 1.0) / 0.05).floor() as isize).clamp(0, HISTOGRAM_BINS as isize - 1);
        self.counts[k as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    /// Pearson correlations; rows and columns of zero-variance series are NaN.
    pub matrix: Array2<f64>,
    /// Indices of zero-variance series.
    pub missing: Vec<usize>,
    /// Each unordered off-diagonal pair counted once.
    pub histogram: Histogram,
}

/// Pearson correlation of every pair of equal-length series. Point `k`
/// conventionally is grid cell `(k / W, k % W)`.
pub fn correlation_matrix(series: &[Vec<f64>]) -> Result<Correlation> {
    let p = series.len();
    if p < 2 {
        return Err(Error::Input(format!("need at least 2 series, got {p}")));
    }
    let n = series[0].len();
    if n < 2 || series.iter().any(|s| s.len() != n) {
        return Err(Error::Input("series must share one length of at least 2".into()));
    }
    let mut centered = Array2::<f64>::zeros((p, n));
    let mut missing = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let mean = s.iter().sum::<f64>() / n as f64;
        let mut row = centered.index_axis_mut(Axis(0), i);
        for (dst, x) in row.iter_mut().zip(s) {
            *dst = x - mean;
        }
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 && s.iter().any(|&x| x != s[0]) {
            row /= norm;
        } else {
            missing.push(i);
        }
    }
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            (0..p)
                .map(|j| {
                    if missing.contains(&i) || missing.contains(&j) {
                        f64::NAN
                    } else if i == j {
                        1.0
                    } else {
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        centered.row(a).dot(&centered.row(b)).clamp(-1.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();
    let matrix = Array2::from_shape_fn((p, p), |(i, j)| rows[i][j]);
    let mut histogram = Histogram {
        counts: [0; HISTOGRAM_BINS],
    };
    for i in 0..p {
        for j in i + 1..p {
            let r = matrix[[i, j]];
            if r.is_finite() {
                histogram.add(r);
            }
        }
    }
    Ok(Correlation {
        matrix,
        missing,
        histogram,
    })
}
