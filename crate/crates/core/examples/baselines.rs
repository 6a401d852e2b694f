//! Persistence and monthly mean-value forecasts on 24-hour blocks.
//!
//! cargo run --example baselines

use windfield::baselines::{fit_monthly_means, meanvalue_forecasts, persistence_forecasts};
use windfield::evaluation::{grand_mean, ErrorArray, Metric};
use windfield::griddata::{block_average, SplitScheme};
use windfield::synthgen::{generate, SynthConfig};

fn main() -> windfield::Result<()> {
    let synth = SynthConfig {
        height: 10,
        width: 10,
        t_len_hours: 3 * 8760,
        ..SynthConfig::default()
    };
    let hourly = generate(&synth)?;
    let scheme = SplitScheme::TwentyFourHour;
    let blocks = block_average(&hourly, scheme.block_hours())?;

    // monthly means from the first two years, forecasts over the third
    let train_hours = 2 * 8760;
    let mm = fit_monthly_means(&hourly.slice_steps(0, train_hours)?)?;
    let steps: Vec<usize> = (train_hours / 24..blocks.t_len()).collect();
    let observed = ndarray::stack(
        ndarray::Axis(0),
        &steps.iter().map(|&t| blocks.field(t)).collect::<Vec<_>>(),
    )
    .expect("equal shapes");
    let t_hours: Vec<usize> = steps.iter().map(|&t| blocks.hour_of_step(t)).collect();

    for (name, forecast) in [
        ("persistence", persistence_forecasts(&blocks, &steps)?),
        ("mean value", meanvalue_forecasts(&mm, &blocks, &steps)?),
    ] {
        let errs = ErrorArray::from_forecasts(observed.view(), forecast.view(), t_hours.clone())?;
        println!(
            "{name:>12}: MSE {:.4}  MAE {:.4}",
            grand_mean(&errs, Metric::Mse),
            grand_mean(&errs, Metric::Mae)
        );
    }
    for month in [1, 4, 7, 10] {
        let m = mm.month(month)?;
        println!("month {month:>2} mean field average {:.3} m/s", m.mean().unwrap());
    }
    Ok(())
}
