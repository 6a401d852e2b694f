//! Error analysis of persistence forecasts: sequence/matrix summaries,
//! relative errors, autocorrelation, spatial correlation, bias correction and
//! the confidence region of corrected forecasts.
//!
//! cargo run --release --example error_analysis

use ndarray::{s, Axis};
use windfield::baselines::persistence_forecasts;
use windfield::evaluation::{
    acf, apply_bias, confidence_region, correlation_matrix, error_sequence_and_matrix, fit_bias, grand_mean, quantiles,
    relative_errors, summarize, ConfidenceRegion, ErrorArray, Metric, RELATIVE_ERROR_FLOOR,
};
use windfield::griddata::{block_average, GridSeries};
use windfield::synthgen::{generate, SynthConfig};

fn persistence_errors(blocks: &GridSeries, steps: &[usize]) -> windfield::Result<(ErrorArray, ndarray::Array3<f64>)> {
    let observed = blocks.values().select(Axis(0), steps);
    let forecast = persistence_forecasts(blocks, steps)?;
    let errs = ErrorArray::from_forecasts(observed.view(), forecast.view(), steps.to_vec())?;
    Ok((errs, forecast))
}

fn main() -> windfield::Result<()> {
    let synth = SynthConfig {
        height: 5,
        width: 5,
        t_len_hours: 8760,
        ..SynthConfig::default()
    };
    let blocks = block_average(&generate(&synth)?, 6)?;
    let n = blocks.t_len();
    let train: Vec<usize> = (1..n * 4 / 5).collect();
    let test: Vec<usize> = (n * 4 / 5..n).collect();
    let (errs, forecast) = persistence_errors(&blocks, &test)?;

    for metric in [Metric::Mse, Metric::Mae] {
        let (seq, mat) = error_sequence_and_matrix(&errs, metric)?;
        let a = summarize(&seq.to_vec())?;
        let b = summarize(&mat.iter().copied().collect::<Vec<_>>())?;
        println!(
            "{}: grand mean {:.4}; sequence median {:.4} sd {:.4}; matrix min {:.4} max {:.4}",
            metric.name(),
            grand_mean(&errs, metric),
            a.median,
            a.standard_deviation,
            b.min,
            b.max
        );
    }

    let observed = blocks.values().select(Axis(0), &test);
    let rel = relative_errors(&errs, observed.view(), RELATIVE_ERROR_FLOOR)?;
    let q = quantiles(&rel.values, &[0.5, 0.9, 0.99])?;
    println!(
        "relative error quantiles 50/90/99%: {:.3} {:.3} {:.3}",
        q[0], q[1], q[2]
    );

    let centre: Vec<f64> = errs.errors.slice(s![.., 2, 2]).to_vec();
    let r = acf(&centre, &[1, 2, 3, 4])?;
    println!("error ACF at the centre cell, lags 1-4: {r:.3?}");

    let points: Vec<Vec<f64>> = (0..25)
        .map(|k| errs.errors.slice(s![.., k / 5, k % 5]).to_vec())
        .collect();
    let corr = correlation_matrix(&points)?;
    println!(
        "neighbour error correlation {:.3}, corner-to-corner {:.3}",
        corr.matrix[[0, 1]],
        corr.matrix[[0, 24]]
    );

    let (train_errs, _) = persistence_errors(&blocks, &train)?;
    let bc = fit_bias(&train_errs)?;
    let corrected = apply_bias(forecast.view(), &bc)?;
    let after = ErrorArray::from_forecasts(observed.view(), corrected.view(), test.clone())?;
    println!(
        "test MSE before/after bias correction: {:.4} / {:.4}",
        grand_mean(&errs, Metric::Mse),
        grand_mean(&after, Metric::Mse)
    );

    let region = ConfidenceRegion::from_training_errors(&train_errs, 0.05)?;
    let inside = (0..test.len())
        .filter(|&k| {
            confidence_region(
                &region,
                observed.index_axis(Axis(0), k),
                corrected.index_axis(Axis(0), k),
            )
            .map(|(_, ok)| ok)
            .unwrap_or(false)
        })
        .count();
    println!(
        "95% region in {} dimensions (threshold {:.2}) covers {inside}/{} test fields",
        region.p(),
        region.threshold(),
        test.len()
    );
    Ok(())
}
