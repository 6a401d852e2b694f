//! BIC-selected ARIMA on a simulated AR(2) series, plus the per-anchor
//! test protocol on a single synthetic grid cell.
//!
//! cargo run --release --example arima_selection

use rand::Rng;
use rand_distr::StandardNormal;
use windfield::baselines::{
    arima_forecast_1step, arima_select, arima_test_protocol, ProtocolConfig, SelectMode, ORDER_P_MAX, ORDER_Q_MAX,
};
use windfield::rng;
use windfield::synthgen::{generate, SynthConfig};

fn main() -> windfield::Result<()> {
    let mut g = rng::seeded(11);
    let mut x = vec![0.0; 1000];
    for t in 2..x.len() {
        x[t] = 0.5 * x[t - 1] + 0.3 * x[t - 2] + g.sample::<f64, _>(StandardNormal);
    }
    let sel = arima_select(&x, &[0, 1], ORDER_P_MAX, ORDER_Q_MAX, SelectMode::PerDifference)?;
    for fit in &sel.winners {
        println!(
            "d={} -> ({},{},{}) bic {:.2} ar {:?} ma {:?}",
            fit.d, fit.p, fit.d, fit.q, fit.bic, fit.ar_coefficients, fit.ma_coefficients
        );
    }
    println!("{} candidates, {} skipped", sel.candidates, sel.skipped.len());
    let best = sel.best();
    println!(
        "overall best ({},{},{}); next value forecast {:.4}",
        best.p,
        best.d,
        best.q,
        arima_forecast_1step(best, &x)?
    );

    let synth = SynthConfig {
        height: 4,
        width: 4,
        t_len_hours: 9000,
        ..SynthConfig::default()
    };
    let cell = generate(&synth)?.point_series(1, 2);
    let cfg = ProtocolConfig {
        window_hours: 3000,
        p_max: 3,
        q_max: 2,
        ..ProtocolConfig::new(6)
    };
    let anchors: Vec<usize> = (0..8).map(|k| 3000 + 600 * k).collect();
    let result = arima_test_protocol(&cell, &anchors, &cfg)?;
    print!("{}", result.to_csv(1, 2, true));
    Ok(())
}
