//! Gridded wind series: file format, block averaging, samples and scaling.

mod samples;
mod scale;
mod stats;
mod wndf;

use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};

pub use samples::{make_samples, Partitions, SampleRates, SampleSet, Split, SplitScheme, SplitSpec};
pub use scale::{fit_scale, scale, unscale, ScaleParams};
pub use stats::{field_stats, FieldStats};
pub use wndf::{decode_grid, encode_grid, read_grid_file, write_grid_file, WNDF_MAGIC, WNDF_VERSION};

use crate::{Error, Result};

/// Days per calendar month on the non-leap calendar used for month attribution.
const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// A time-major stack of `height × width` wind-speed fields in m/s.
///
/// `values` is indexed `[t][row][col]`. Every value is finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSeries {
    values: Array3<f64>,
    step_hours: u32,
    origin_index: u32,
    start_month: u32,
}

impl GridSeries {
    pub fn new(values: Array3<f64>, step_hours: u32, origin_index: u32, start_month: u32) -> Result<Self> {
        if step_hours == 0 {
            return Err(Error::Input("step_hours must be positive".into()));
        }
        if !(1..=12).contains(&start_month) {
            return Err(Error::Input(format!("start_month {start_month} outside 1..=12")));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation { index, value });
        }
        Ok(Self {
            values,
            step_hours,
            origin_index,
            start_month,
        })
    }

    /// An hourly series starting at the beginning of `start_month`.
    pub fn hourly(values: Array3<f64>, start_month: u32) -> Result<Self> {
        Self::new(values, 1, 0, start_month)
    }

    pub fn values(&self) -> ArrayView3<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    pub fn t_len(&self) -> usize {
        self.values.len_of(Axis(0))
    }

    pub fn height(&self) -> usize {
        self.values.len_of(Axis(1))
    }

    pub fn width(&self) -> usize {
        self.values.len_of(Axis(2))
    }

    pub fn step_hours(&self) -> u32 {
        self.step_hours
    }

    pub fn origin_index(&self) -> u32 {
        self.origin_index
    }

    pub fn start_month(&self) -> u32 {
        self.start_month
    }

    pub fn field(&self, t: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), t)
    }

    /// Hourly offset of step `t` from the first hour of the series.
    pub fn hour_of_step(&self, t: usize) -> usize {
        t * self.step_hours as usize
    }

    /// Calendar month (1–12) of step `t`, taken from the step's first hour.
    pub fn month_of_step(&self, t: usize) -> u32 {
        month_of_hour(self.start_month, self.hour_of_step(t))
    }

    /// A contiguous sub-range of steps. The origin index advances accordingly;
    /// the calendar anchor is recomputed for the new first step.
    pub fn slice_steps(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.t_len() {
            return Err(Error::Input(format!(
                "step range {start}..{end} outside 0..{}",
                self.t_len()
            )));
        }
        let hour = self.hour_of_step(start);
        Ok(Self {
            values: self.values.slice(s![start..end, .., ..]).to_owned(),
            step_hours: self.step_hours,
            origin_index: self.origin_index + hour as u32,
            start_month: month_of_hour(self.start_month, hour),
        })
    }

    /// The series at one grid cell.
    pub fn point_series(&self, row: usize, col: usize) -> Vec<f64> {
        self.values.slice(s![.., row, col]).to_vec()
    }
}

/// Calendar month of the hour `hour` counted from the first hour of
/// `start_month`, on a 365-day calendar.
pub fn month_of_hour(start_month: u32, hour: usize) -> u32 {
    let mut day = (hour / 24) as u64;
    let mut month = (start_month - 1) as usize;
    let year_days: u64 = 365;
    day %= year_days;
    loop {
        let len = MONTH_DAYS[month] as u64;
        if day < len {
            return month as u32 + 1;
        }
        day -= len;
        month = (month + 1) % 12;
    }
}

/// Averages consecutive hourly fields into blocks of `block_hours`.
///
/// Block `b` at `(r, c)` is the mean of hours `b·block_hours ..
/// (b+1)·block_hours`. Hours left over after the last whole block are dropped.
pub fn block_average(raw: &GridSeries, block_hours: u32) -> Result<GridSeries> {
    if raw.step_hours != 1 {
        return Err(Error::Input(format!(
            "block averaging needs an hourly series, got step {}",
            raw.step_hours
        )));
    }
    if block_hours == 0 {
        return Err(Error::Input("block_hours must be positive".into()));
    }
    let bh = block_hours as usize;
    let n_blocks = raw.t_len() / bh;
    if n_blocks == 0 {
        return Err(Error::InsufficientData(format!(
            "{} hours cannot fill one {bh}-hour block",
            raw.t_len()
        )));
    }
    let mut out = Array3::<f64>::zeros((n_blocks, raw.height(), raw.width()));
    for b in 0..n_blocks {
        let window = raw.values.slice(s![b * bh..(b + 1) * bh, .., ..]);
        let mut acc = out.index_axis_mut(Axis(0), b);
        for hour in window.axis_iter(Axis(0)) {
            acc += &hour;
        }
        acc /= bh as f64;
    }
    Ok(GridSeries {
        values: out,
        step_hours: block_hours,
        origin_index: raw.origin_index,
        start_month: raw.start_month,
    })
}

/// Block-averages a raw `[t][row][col]` window without metadata.
pub(crate) fn block_average_window(window: ArrayView3<f64>, block_hours: usize) -> Array3<f64> {
    let n_blocks = window.len_of(Axis(0)) / block_hours;
    let (_, h, w) = window.dim();
    let mut out = Array3::<f64>::zeros((n_blocks, h, w));
    for b in 0..n_blocks {
        let mut acc: Array2<f64> = Array2::zeros((h, w));
        for hour in window
            .slice(s![b * block_hours..(b + 1) * block_hours, .., ..])
            .axis_iter(Axis(0))
        {
            acc += &hour;
        }
        out.index_axis_mut(Axis(0), b).assign(&(acc / block_hours as f64));
    }
    out
}
