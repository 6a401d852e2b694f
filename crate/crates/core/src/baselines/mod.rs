//! Reference forecasters: persistence, monthly mean value and
//! BIC-selected ARIMA.

mod arima;
mod protocol;

pub use arima::{
    arima_fit, arima_forecast_1step, arima_select, bic, difference, ArimaFit, SelectMode, Selection, SkippedFit,
    ORDER_P_MAX, ORDER_Q_MAX,
};
pub use protocol::{arima_test_protocol, ProtocolConfig, ProtocolResult, ProtocolRow, SkippedAnchor};

use ndarray::{Array2, Array3, Axis};

use crate::griddata::GridSeries;
use crate::{Error, Result};

/// Forecast for step `t`: the observed step `t − 1`.
pub fn persistence_forecast(blocks: &GridSeries, t: usize) -> Result<Array2<f64>> {
    if t == 0 {
        return Err(Error::Input("persistence needs a predecessor; t = 0 has none".into()));
    }
    if t >= blocks.t_len() {
        return Err(Error::Input(format!(
            "step {t} outside series of {} steps",
            blocks.t_len()
        )));
    }
    Ok(blocks.field(t - 1).to_owned())
}

/// Persistence forecasts for every listed step, stacked along the first axis.
pub fn persistence_forecasts(blocks: &GridSeries, steps: &[usize]) -> Result<Array3<f64>> {
    stack(
        steps.iter().map(|&t| persistence_forecast(blocks, t)),
        blocks.height(),
        blocks.width(),
    )
}

/// Per-location means for each calendar month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyMeans {
    /// `[month − 1][row][col]`.
    pub means: Array3<f64>,
}

impl MonthlyMeans {
    pub fn month(&self, month: u32) -> Result<Array2<f64>> {
        if !(1..=12).contains(&month) {
            return Err(Error::Input(format!("month {month} outside 1..=12")));
        }
        Ok(self.means.index_axis(Axis(0), month as usize - 1).to_owned())
    }
}

/// Averages every training step by the calendar month of its first hour.
/// All twelve months must be present.
pub fn fit_monthly_means(train: &GridSeries) -> Result<MonthlyMeans> {
    let (h, w) = (train.height(), train.width());
    let mut sums = Array3::<f64>::zeros((12, h, w));
    let mut counts = [0usize; 12];
    for t in 0..train.t_len() {
        let m = train.month_of_step(t) as usize - 1;
        let mut acc = sums.index_axis_mut(Axis(0), m);
        acc += &train.field(t);
        counts[m] += 1;
    }
    let missing: Vec<u32> = (1..=12).filter(|&m| counts[m as usize - 1] == 0).collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(missing));
    }
    for (m, mut field) in sums.axis_iter_mut(Axis(0)).enumerate() {
        field /= counts[m] as f64;
    }
    Ok(MonthlyMeans { means: sums })
}

/// Forecast for a block whose first hour falls in `month`.
pub fn meanvalue_forecast(mm: &MonthlyMeans, month: u32) -> Result<Array2<f64>> {
    mm.month(month)
}

/// Mean-value forecasts for the listed steps of `blocks`, using each step's
/// calendar month.
pub fn meanvalue_forecasts(mm: &MonthlyMeans, blocks: &GridSeries, steps: &[usize]) -> Result<Array3<f64>> {
    stack(
        steps.iter().map(|&t| {
            if t >= blocks.t_len() {
                return Err(Error::Input(format!(
                    "step {t} outside series of {} steps",
                    blocks.t_len()
                )));
            }
            meanvalue_forecast(mm, blocks.month_of_step(t))
        }),
        blocks.height(),
        blocks.width(),
    )
}

fn stack(fields: impl ExactSizeIterator<Item = Result<Array2<f64>>>, h: usize, w: usize) -> Result<Array3<f64>> {
    let mut out = Array3::<f64>::zeros((fields.len(), h, w));
    for (i, f) in fields.enumerate() {
        out.index_axis_mut(Axis(0), i).assign(&f?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn persistence_returns_previous_block() {
        let v = Array3::from_shape_fn((3, 1, 2), |(t, _, c)| (t * 10 + c) as f64);
        let g = GridSeries::new(v, 6, 0, 1).unwrap();
        assert_eq!(persistence_forecast(&g, 2).unwrap(), array![[10.0, 11.0]]);
        assert!(matches!(persistence_forecast(&g, 0), Err(Error::Input(_))));
        assert!(persistence_forecast(&g, 3).is_err());
    }

    #[test]
    fn two_month_toggle() {
        // 31 days of January at 2.0 then 28 of February at 4.0, then a
        // constant 1.0 for the rest of the year
        let hours = 365 * 24;
        let v = Array3::from_shape_fn((hours, 1, 1), |(t, _, _)| match t / 24 {
            d if d < 31 => 2.0,
            d if d < 59 => 4.0,
            _ => 1.0,
        });
        let g = GridSeries::hourly(v, 1).unwrap();
        let mm = fit_monthly_means(&g).unwrap();
        assert_eq!(meanvalue_forecast(&mm, 1).unwrap()[[0, 0]], 2.0);
        assert_eq!(meanvalue_forecast(&mm, 2).unwrap()[[0, 0]], 4.0);
        assert_eq!(meanvalue_forecast(&mm, 7).unwrap()[[0, 0]], 1.0);
        assert!(meanvalue_forecast(&mm, 13).is_err());
    }

    #[test]
    fn missing_months_are_listed() {
        let g = GridSeries::hourly(Array3::ones((24 * 40, 2, 2)), 11).unwrap();
        match fit_monthly_means(&g) {
            Err(Error::Coverage(m)) => assert_eq!(m, vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
            other => panic!("{other:?}"),
        }
    }
}
