//! Seeded synthetic wind-like grid series.
//!
//! `value(t, r, c) = max(0, M(r, c) + A·sin(2πt / P) + e(t, r, c))` where `M`
//! is a fixed pattern of two Gaussian bumps over `base_mean`, `A` the seasonal
//! amplitude with period `P` hours, and `e` an AR(1)-in-time field driven by
//! spatially smoothed white noise.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::griddata::GridSeries;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub t_len_hours: usize,
    pub seed: u64,
    pub base_mean: f64,
    pub season_amplitude: f64,
    pub period_hours: usize,
    pub spatial_smooth_radius: usize,
    pub temporal_ar_coefficient: f64,
    /// Innovation standard deviation of the AR(1) field at interior cells.
    pub noise_sd: f64,
    /// Calendar month of the first hour.
    pub start_month: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 16,
            width: 16,
            t_len_hours: 2 * 8760,
            seed: 42,
            base_mean: 6.0,
            season_amplitude: 1.5,
            period_hours: 8760,
            spatial_smooth_radius: 2,
            temporal_ar_coefficient: 0.95,
            noise_sd: 0.6,
            start_month: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.t_len_hours == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive, got {}x{}x{}",
                self.t_len_hours, self.height, self.width
            )));
        }
        if self.period_hours == 0 {
            return Err(Error::Config("period_hours must be positive".into()));
        }
        if !(self.base_mean > 0.0) {
            return Err(Error::Config(format!("base_mean {} must be positive", self.base_mean)));
        }
        if !(self.season_amplitude >= 0.0 && self.season_amplitude < self.base_mean) {
            return Err(Error::Config(format!(
                "season_amplitude {} must lie in [0, base_mean)",
                self.season_amplitude
            )));
        }
        if !(0.0..1.0).contains(&self.temporal_ar_coefficient) {
            return Err(Error::Config(format!(
                "temporal_ar_coefficient {} outside [0, 1)",
                self.temporal_ar_coefficient
            )));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Config(format!("noise_sd {} is negative", self.noise_sd)));
        }
        if !(1..=12).contains(&self.start_month) {
            return Err(Error::Config(format!(
                "start_month {} outside 1..=12",
                self.start_month
            )));
        }
        Ok(())
    }
}

/// The seed-derived mean pattern: `base_mean` plus two positive Gaussian bumps.
pub fn mean_pattern(config: &SynthConfig) -> Array2<f64> {
    let mut rng = rng::seeded(config.seed);
    pattern_from(&mut rng, config)
}

fn pattern_from(rng: &mut rng::Rng, config: &SynthConfig) -> Array2<f64> {
    let (h, w) = (config.height as f64, config.width as f64);
    let bumps: Vec<[f64; 4]> = (0..2)
        .map(|_| {
            let cr = rng.random_range(0.0..1.0) * h;
            let cc = rng.random_range(0.0..1.0) * w;
            let width = (0.15 + 0.25 * rng.random::<f64>()) * h.max(w);
            let amp = (0.1 + 0.4 * rng.random::<f64>()) * config.base_mean;
            [cr, cc, width, amp]
        })
        .collect();
    Array2::from_shape_fn((config.height, config.width), |(r, c)| {
        let mut m = config.base_mean;
        for [cr, cc, width, amp] in &bumps {
            let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
            m += amp * (-d2 / (2.0 * width * width)).exp();
        }
        m
    })
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

/// Moving-average smoothing over a `(2r+1)²` window with reflective borders,
/// rescaled by `2r+1` so interior cells keep unit variance for white noise.
fn smooth(noise: &Array2<f64>, radius: usize) -> Array2<f64> {
    if radius == 0 {
        return noise.clone();
    }
    let (h, w) = noise.dim();
    let r = radius as isize;
    let side = (2 * radius + 1) as f64;
    Array2::from_shape_fn((h, w), |(i, j)| {
        let mut s = 0.0;
        for di in -r..=r {
            for dj in -r..=r {
                s += noise[[reflect(i as isize + di, h), reflect(j as isize + dj, w)]];
            }
        }
        s / side
    })
}

/// Generates the series. Identical configs give bit-identical output.
pub fn generate(config: &SynthConfig) -> Result<GridSeries> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let pattern = pattern_from(&mut rng, config);
    let (h, w) = (config.height, config.width);
    let phi = config.temporal_ar_coefficient;
    let draw_innovation = |rng: &mut rng::Rng| {
        let white = Array2::from_shape_fn((h, w), |_| rng.sample::<f64, _>(StandardNormal));
        smooth(&white, config.spatial_smooth_radius) * config.noise_sd
    };
    // start from the stationary distribution
    let mut anomaly = draw_innovation(&mut rng) / (1.0 - phi * phi).sqrt();
    let mut values = Array3::<f64>::zeros((config.t_len_hours, h, w));
    for (t, mut field) in values.axis_iter_mut(Axis(0)).enumerate() {
        if t > 0 {
            anomaly = anomaly * phi + draw_innovation(&mut rng);
        }
        let season = config.season_amplitude * (2.0 * PI * t as f64 / config.period_hours as f64).sin();
        ndarray::Zip::from(&mut field)
            .and(&pattern)
            .and(&anomaly)
            .for_each(|v, &m, &e| *v = (m + season + e).max(0.0));
    }
    GridSeries::hourly(values, config.start_month)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SynthConfig {
        SynthConfig {
            height: 5,
            width: 4,
            t_len_hours: 300,
            period_hours: 100,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn noise_free_without_season_is_the_pattern() {
        let cfg = SynthConfig {
            noise_sd: 0.0,
            season_amplitude: 0.0,
            ..quiet()
        };
        let s = generate(&cfg).unwrap();
        let m = mean_pattern(&cfg);
        for f in s.values().axis_iter(Axis(0)) {
            assert_eq!(f, m);
        }
    }

    #[test]
    fn noise_free_spatial_mean_is_sinusoid() {
        let cfg = SynthConfig {
            noise_sd: 0.0,
            ..quiet()
        };
        let s = generate(&cfg).unwrap();
        let m = mean_pattern(&cfg).mean().unwrap();
        for (t, f) in s.values().axis_iter(Axis(0)).enumerate() {
            let expect = m + cfg.season_amplitude * (2.0 * PI * t as f64 / 100.0).sin();
            assert!((f.mean().unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_and_nonnegative() {
        let cfg = SynthConfig {
            noise_sd: 5.0,
            ..quiet()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|&v| v >= 0.0));
        let c = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_height_is_config_error() {
        let cfg = SynthConfig { height: 0, ..quiet() };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(3, 1), 0);
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn ar_and_spatial_correlation() {
        let cfg = SynthConfig {
            height: 8,
            width: 8,
            t_len_hours: 10_000,
            seed: 5,
            base_mean: 20.0,
            season_amplitude: 2.0,
            period_hours: 2000,
            spatial_smooth_radius: 2,
            temporal_ar_coefficient: 0.9,
            noise_sd: 1.0,
            start_month: 1,
        };
        let s = generate(&cfg).unwrap();
        let m = mean_pattern(&cfg).mean().unwrap();
        let anomaly: Vec<f64> = s
            .values()
            .axis_iter(Axis(0))
            .enumerate()
            .map(|(t, f)| f.mean().unwrap() - m - cfg.season_amplitude * (2.0 * PI * t as f64 / 2000.0).sin())
            .collect();
        let rho1 = pearson(&anomaly[..anomaly.len() - 1], &anomaly[1..]);
        assert!((rho1 - 0.9).abs() < 0.05, "lag-1 acf {rho1}");
        let a = s.point_series(3, 3);
        let b = s.point_series(3, 4);
        assert!(pearson(&a, &b) > 0.5);
    }

    #[test]
    fn persistence_beats_global_mean() {
        let cfg = SynthConfig {
            t_len_hours: 3000,
            ..quiet()
        };
        let s = generate(&cfg).unwrap();
        let v = s.values();
        let mean = v.mean().unwrap();
        let (mut pers, mut glob) = (0.0, 0.0);
        for t in 1..s.t_len() {
            let d = &v.index_axis(Axis(0), t) - &v.index_axis(Axis(0), t - 1);
            pers += d.mapv(|x| x * x).sum();
            glob += v.index_axis(Axis(0), t).mapv(|x| (x - mean).powi(2)).sum();
        }
        assert!(pers < glob);
    }
}
