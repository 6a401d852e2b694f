use ndarray::Array3;
use rand::Rng;
use rand_distr::StandardNormal;
use windfield::baselines::*;
use windfield::griddata::{month_of_hour, GridSeries};
use windfield::rng::seeded;

fn random_hourly(seed: u64, hours: usize, h: usize, w: usize, start_month: u32) -> GridSeries {
    let mut rng = seeded(seed);
    GridSeries::hourly(
        Array3::from_shape_fn((hours, h, w), |_| rng.random_range(0.0..12.0)),
        start_month,
    )
    .unwrap()
}

fn ar_series(phi: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let burn = 200;
    let mut x = vec![0.0; n + burn];
    for t in phi.len()..x.len() {
        let mut v: f64 = rng.sample(StandardNormal);
        for (i, f) in phi.iter().enumerate() {
            v += f * x[t - 1 - i];
        }
        x[t] = v;
    }
    x.split_off(burn)
}

#[test]
fn persistence_matches_shifted_copy_bitwise() {
    let g = random_hourly(1, 50, 4, 3, 1);
    let steps: Vec<usize> = (1..50).collect();
    let got = persistence_forecasts(&g, &steps).unwrap();
    for (i, &t) in steps.iter().enumerate() {
        for r in 0..4 {
            for c in 0..3 {
                assert_eq!(got[[i, r, c]].to_bits(), g.values()[[t - 1, r, c]].to_bits());
            }
        }
    }
}

#[test]
fn persistence_mse_is_mean_squared_first_difference() {
    let g = random_hourly(2, 80, 3, 3, 1);
    let steps: Vec<usize> = (1..80).collect();
    let f = persistence_forecasts(&g, &steps).unwrap();
    let v = g.values();
    let mut mse = 0.0;
    let mut diff = 0.0;
    let mut n = 0.0;
    for (i, &t) in steps.iter().enumerate() {
        for r in 0..3 {
            for c in 0..3 {
                mse += (v[[t, r, c]] - f[[i, r, c]]).powi(2);
                diff += (v[[t, r, c]] - v[[t - 1, r, c]]).powi(2);
                n += 1.0;
            }
        }
    }
    assert!((mse / n - diff / n).abs() < 1e-12);
}

/// Group-by oracle: for each cell, collect values per month and average.
fn groupby_means(g: &GridSeries) -> Vec<Vec<Vec<f64>>> {
    let mut sums = vec![vec![vec![0.0; g.width()]; g.height()]; 12];
    let mut counts = [0.0; 12];
    for t in 0..g.t_len() {
        let m = month_of_hour(g.start_month(), t) as usize - 1;
        counts[m] += 1.0;
        for r in 0..g.height() {
            for c in 0..g.width() {
                sums[m][r][c] += g.values()[[t, r, c]];
            }
        }
    }
    for m in 0..12 {
        for row in &mut sums[m] {
            for v in row.iter_mut() {
                *v /= counts[m];
            }
        }
    }
    sums
}

#[test]
fn monthly_means_match_groupby_oracle() {
    let g = random_hourly(3, 8760, 2, 3, 4);
    let mm = fit_monthly_means(&g).unwrap();
    let oracle = groupby_means(&g);
    for m in 1..=12u32 {
        let f = meanvalue_forecast(&mm, m).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(f[[r, c]].to_bits(), oracle[m as usize - 1][r][c].to_bits());
            }
        }
    }
}

#[test]
fn monthly_means_minimize_training_mse() {
    let g = random_hourly(4, 8760, 1, 2, 1);
    let mm = fit_monthly_means(&g).unwrap();
    let mse = |shift: [f64; 12]| {
        let mut s = 0.0;
        for t in 0..g.t_len() {
            let m = g.month_of_step(t);
            let f = meanvalue_forecast(&mm, m).unwrap();
            for c in 0..2 {
                s += (g.values()[[t, 0, c]] - f[[0, c]] - shift[m as usize - 1]).powi(2);
            }
        }
        s
    };
    let base = mse([0.0; 12]);
    let mut rng = seeded(5);
    for _ in 0..20 {
        let mut shift = [0.0; 12];
        shift[rng.random_range(0..12)] = rng.random_range(-0.5..0.5);
        assert!(mse(shift) > base);
    }
}

#[test]
fn constant_training_data() {
    let g = GridSeries::hourly(Array3::from_elem((8760, 2, 2), 5.5), 1).unwrap();
    let mm = fit_monthly_means(&g).unwrap();
    assert!(mm.means.iter().all(|&v| v == 5.5));
    let blocks = windfield::griddata::block_average(&g, 6).unwrap();
    let f = meanvalue_forecasts(&mm, &blocks, &[0, 100, 1459]).unwrap();
    assert!(f.iter().all(|&v| v == 5.5));
    let p = persistence_forecasts(&blocks, &[1, 700]).unwrap();
    assert!(p.iter().all(|&v| v == 5.5));
}

#[test]
fn ar1_estimates_concentrate_near_truth() {
    let hits = (0..100)
        .filter(|&s| {
            let x = ar_series(&[0.7], 1000, 1000 + s);
            let f = arima_fit(&x, 1, 0, 0).unwrap();
            (f.ar_coefficients[0] - 0.7).abs() <= 0.06
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn ar2_order_recovered() {
    let hits = (0..50)
        .filter(|&s| {
            let x = ar_series(&[0.5, 0.3], 1000, 2000 + s);
            let sel = arima_select(&x, &[0, 1], ORDER_P_MAX, ORDER_Q_MAX, SelectMode::PerDifference).unwrap();
            let f = sel.for_d(0).unwrap();
            (f.p, f.d, f.q) == (2, 0, 0)
        })
        .count();
    assert!(hits >= 35, "{hits}/50");
}

#[test]
fn white_noise_selects_the_null_model_most_often() {
    let mut counts = std::collections::HashMap::new();
    for s in 0..30 {
        let x = ar_series(&[], 400, 3000 + s);
        let sel = arima_select(&x, &[0], 3, 2, SelectMode::Global).unwrap();
        let f = sel.best();
        *counts.entry((f.p, f.q)).or_insert(0) += 1;
    }
    let null = counts.get(&(0, 0)).copied().unwrap_or(0);
    assert!(counts.values().all(|&c| c <= null), "{counts:?}");
}

#[test]
fn refit_on_simulated_fit_recovers_coefficients() {
    let x = ar_series(&[0.6, -0.2], 3000, 7);
    let fit = arima_fit(&x, 2, 0, 1).unwrap();
    // simulate from the fitted model and fit again
    let mut rng = seeded(8);
    let n = 4000;
    let mut y = vec![0.0; n];
    let mut e = vec![0.0; n];
    for t in 2..n {
        e[t] = fit.innovation_variance.sqrt() * rng.sample::<f64, _>(StandardNormal);
        y[t] = fit.intercept
            + fit.ar_coefficients[0] * y[t - 1]
            + fit.ar_coefficients[1] * y[t - 2]
            + e[t]
            + fit.ma_coefficients[0] * e[t - 1];
    }
    let refit = arima_fit(&y[500..], 2, 0, 1).unwrap();
    for (a, b) in refit.ar_coefficients.iter().zip(&fit.ar_coefficients) {
        assert!((a - b).abs() < 0.1, "{refit:?} vs {fit:?}");
    }
    assert!((refit.ma_coefficients[0] - fit.ma_coefficients[0]).abs() < 0.1);
    assert!((refit.innovation_variance / fit.innovation_variance - 1.0).abs() < 0.1);
}

#[test]
fn protocol_six_hour_window_has_a_thousand_points() {
    let cfg = ProtocolConfig::new(6);
    assert_eq!(cfg.training_points(), 1000);
    // hourly AR(1) series with a mean level
    let hourly: Vec<f64> = ar_series(&[0.95], 6600, 9).iter().map(|v| v + 8.0).collect();
    let small = ProtocolConfig {
        p_max: 2,
        q_max: 1,
        ..cfg
    };
    let r = arima_test_protocol(&hourly, &[6000, 6300, 6595, 5999], &small).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert_eq!(r.skipped.len(), 2);
    for row in &r.rows {
        let observed = hourly[row.anchor_t..row.anchor_t + 6].iter().sum::<f64>() / 6.0;
        assert_eq!(row.observed, observed);
        assert_eq!(row.error, row.observed - row.forecast);
        assert!(row.bic.is_finite());
    }
    assert_eq!(r.rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![0, 1, 0, 1]);
}

#[test]
fn protocol_forecasts_match_direct_selection() {
    let hourly: Vec<f64> = ar_series(&[0.9], 900, 10).iter().map(|v| v + 5.0).collect();
    let cfg = ProtocolConfig {
        window_hours: 720,
        p_max: 2,
        q_max: 1,
        ..ProtocolConfig::new(6)
    };
    let r = arima_test_protocol(&hourly, &[840], &cfg).unwrap();
    let train: Vec<f64> = hourly[120..840]
        .chunks(6)
        .map(|c| c.iter().sum::<f64>() / 6.0)
        .collect();
    let sel = arima_select(&train, &[0, 1], 2, 1, SelectMode::PerDifference).unwrap();
    for (row, fit) in r.rows.iter().zip(&sel.winners) {
        assert_eq!((row.p, row.d, row.q), (fit.p, fit.d, fit.q));
        assert_eq!(row.forecast, arima_forecast_1step(fit, &train).unwrap());
    }
}
