//! Rolling-origin ARIMA evaluation at a single location.

use rayon::prelude::*;

use super::arima::{arima_forecast_1step, arima_select, SelectMode, ORDER_P_MAX, ORDER_Q_MAX};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub block_hours: usize,
    /// Hours of history preceding each anchor used for fitting.
    pub window_hours: usize,
    pub d_set: Vec<usize>,
    pub p_max: usize,
    pub q_max: usize,
}

impl ProtocolConfig {
    pub fn new(block_hours: usize) -> Self {
        Self {
            block_hours,
            window_hours: 6000,
            d_set: vec![0, 1],
            p_max: ORDER_P_MAX,
            q_max: ORDER_Q_MAX,
        }
    }

    /// Training points per window: 1000 for 6-hour blocks, 250 for 24-hour.
    pub fn training_points(&self) -> usize {
        self.window_hours / self.block_hours
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_hours == 0 || self.window_hours == 0 {
            return Err(Error::Config("block_hours and window_hours must be positive".into()));
        }
        if !self.window_hours.is_multiple_of(self.block_hours) {
            return Err(Error::Config(format!(
                "window of {} hours is not a whole number of {}-hour blocks",
                self.window_hours, self.block_hours
            )));
        }
        if self.d_set.is_empty() {
            return Err(Error::Config("empty differencing set".into()));
        }
        Ok(())
    }
}

/// One forecast for one anchor and differencing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRow {
    /// Hour index of the first hour of the forecast block.
    pub anchor_t: usize,
    pub d: usize,
    pub p: usize,
    pub q: usize,
    pub bic: f64,
    pub forecast: f64,
    pub observed: f64,
    /// `observed − forecast`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedAnchor {
    pub anchor_t: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProtocolResult {
    pub rows: Vec<ProtocolRow>,
    pub skipped: Vec<SkippedAnchor>,
}

fn block_means(xs: &[f64], block: usize) -> Vec<f64> {
    xs.chunks_exact(block)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect()
}

fn run_anchor(hourly: &[f64], anchor: usize, cfg: &ProtocolConfig) -> std::result::Result<Vec<ProtocolRow>, String> {
    let bh = cfg.block_hours;
    if anchor < cfg.window_hours {
        return Err(format!("only {anchor} hours of history, need {}", cfg.window_hours));
    }
    if anchor + bh > hourly.len() {
        return Err(format!("block at {anchor} runs past the end of the series"));
    }
    let train = block_means(&hourly[anchor - cfg.window_hours..anchor], bh);
    let observed = hourly[anchor..anchor + bh].iter().sum::<f64>() / bh as f64;
    if train.windows(2).all(|w| w[0] == w[1]) {
        // a flat window admits only the constant forecast
        let forecast = train[0];
        return Ok(cfg
            .d_set
            .iter()
            .map(|&d| ProtocolRow {
                anchor_t: anchor,
                d,
                p: 0,
                q: 0,
                bic: f64::NAN,
                forecast,
                observed,
                error: observed - forecast,
            })
            .collect());
    }
    let selection =
        arima_select(&train, &cfg.d_set, cfg.p_max, cfg.q_max, SelectMode::PerDifference).map_err(|e| e.to_string())?;
    selection
        .winners
        .iter()
        .map(|fit| {
            let forecast = arima_forecast_1step(fit, &train).map_err(|e| e.to_string())?;
            Ok(ProtocolRow {
                anchor_t: anchor,
                d: fit.d,
                p: fit.p,
                q: fit.q,
                bic: fit.bic,
                forecast,
                observed,
                error: observed - forecast,
            })
        })
        .collect()
}

/// For each anchor hour: block-average the preceding `window_hours`, select
/// the minimum-BIC model within each differencing order, forecast the block
/// starting at the anchor and compare with its realized average.
///
/// Anchors are processed in parallel; rows come back in anchor order, then
/// ascending `d`. Anchors without enough history are skipped with a reason.
pub fn arima_test_protocol(hourly: &[f64], anchors: &[usize], cfg: &ProtocolConfig) -> Result<ProtocolResult> {
    cfg.validate()?;
    if let Some(i) = hourly.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation {
            index: i,
            value: hourly[i],
        });
    }
    let outcomes: Vec<_> = anchors.par_iter().map(|&a| (a, run_anchor(hourly, a, cfg))).collect();
    let mut result = ProtocolResult::default();
    for (anchor_t, outcome) in outcomes {
        match outcome {
            Ok(rows) => result.rows.extend(rows),
            Err(reason) => result.skipped.push(SkippedAnchor { anchor_t, reason }),
        }
    }
    Ok(result)
}

impl ProtocolResult {
    /// CSV with header
    /// `location_row,location_col,anchor_t,d,p,q,bic,forecast,observed,error`.
    pub fn to_csv(&self, row: usize, col: usize, header: bool) -> String {
        let mut out = String::new();
        if header {
            out.push_str("location_row,location_col,anchor_t,d,p,q,bic,forecast,observed,error\n");
        }
        for r in &self.rows {
            out.push_str(&format!(
                "{row},{col},{},{},{},{},{},{},{},{}\n",
                r.anchor_t, r.d, r.p, r.q, r.bic, r.forecast, r.observed, r.error
            ));
        }
        out
    }
}
