use ndarray::{Array3, Axis};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use windfield::evaluation::*;
use windfield::rng::seeded;

fn random_errors(seed: u64, t: usize, h: usize, w: usize, shift: f64) -> ErrorArray {
    let mut rng = seeded(seed);
    let e = Array3::from_shape_fn((t, h, w), |(_, r, c)| {
        rng.sample::<f64, _>(StandardNormal) + shift * (r + c) as f64
    });
    ErrorArray::new(e, (0..t).map(|i| 6 * i).collect()).unwrap()
}

#[test]
fn summarize_matches_sort_oracle() {
    let mut rng = seeded(1);
    for n in [1usize, 2, 7, 100, 101] {
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = summarize(&xs).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert_eq!(s.max, sorted[n - 1]);
        assert_eq!(s.min, sorted[0]);
        assert_eq!(s.median, sorted[(n - 1) / 2]);
        assert!((s.mean - mean).abs() < 1e-12);
        if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            assert!((s.standard_deviation - var.sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn grand_mean_identity() {
    let e = random_errors(2, 40, 5, 6, 0.1);
    for metric in [Metric::Mse, Metric::Mae] {
        let (seq, mat) = error_sequence_and_matrix(&e, metric).unwrap();
        let g = grand_mean(&e, metric);
        assert!((seq.mean().unwrap() - g).abs() <= 1e-12 * g);
        assert!((mat.mean().unwrap() - g).abs() <= 1e-12 * g);
    }
}

#[test]
fn chi2_quantile_agrees_with_reference_cdf() {
    for dof in [1usize, 2, 3, 5, 16, 64, 256, 1024] {
        let dist = ChiSquared::new(dof as f64).unwrap();
        for alpha in [0.001, 0.01, 0.05, 0.1, 0.5, 0.9] {
            let x = chi2_quantile(dof, alpha).unwrap();
            assert!((dist.cdf(x) - (1.0 - alpha)).abs() < 1e-9, "dof {dof} alpha {alpha}");
        }
    }
    assert!((chi2_quantile(2, 0.05).unwrap() - 5.991465).abs() < 1e-6);
    assert!((chi2_quantile(1, 0.05).unwrap() - 3.841459).abs() < 1e-6);
}

#[test]
fn white_noise_autocorrelation_is_small() {
    let mut rng = seeded(3);
    let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
    let r = acf(&xs, &[0, 1, 2]).unwrap();
    assert_eq!(r[0], 1.0);
    assert!(r[1].abs() < 0.05 && r[2].abs() < 0.05);
}

#[test]
fn per_location_acf_matches_pointwise() {
    let e = random_errors(4, 50, 3, 2, 0.0);
    let all = per_location_acf(&e, &[1, 2, 3, 4]).unwrap();
    let point: Vec<f64> = e.errors.slice(ndarray::s![.., 2, 1]).to_vec();
    let direct = acf(&point, &[1, 2, 3, 4]).unwrap();
    for (k, v) in direct.iter().enumerate() {
        assert_eq!(all[[k, 2, 1]], *v);
    }
}

#[test]
fn independent_series_are_nearly_uncorrelated() {
    let mut rng = seeded(5);
    let series: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..10_000).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let c = correlation_matrix(&series).unwrap();
    for i in 0..6 {
        assert_eq!(c.matrix[[i, i]], 1.0);
        for j in 0..6 {
            assert_eq!(c.matrix[[i, j]], c.matrix[[j, i]]);
            if i != j {
                assert!(c.matrix[[i, j]].abs() < 0.05);
            }
        }
    }
    assert_eq!(c.histogram.total(), 15);
}

#[test]
fn bias_correction_centers_training_errors() {
    let e = random_errors(6, 30, 4, 4, 0.3);
    let observed = Array3::from_shape_fn((30, 4, 4), |(t, r, c)| 5.0 + (t + r * c) as f64 * 0.1);
    let predicted = &observed - &e.errors;
    let bc = fit_bias(&e).unwrap();
    let corrected = apply_bias(predicted.view(), &bc).unwrap();
    let ce = ErrorArray::from_forecasts(observed.view(), corrected.view(), e.t_indices.clone()).unwrap();
    let (mean, _) = per_location_error_moments(&ce).unwrap();
    assert!(mean.iter().all(|m| m.abs() <= 1e-10));
    assert!(grand_mean(&ce, Metric::Mse) <= grand_mean(&e, Metric::Mse));

    let zero = ErrorArray::new(
        &e.errors - &bc.mean_training_error.view().insert_axis(Axis(0)),
        e.t_indices.clone(),
    )
    .unwrap();
    let z = fit_bias(&zero).unwrap();
    assert!(z.mean_training_error.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn constant_offset_lowers_mae_by_the_offset() {
    let e = ErrorArray::new(Array3::from_elem((8, 2, 2), 0.5), (0..8).collect()).unwrap();
    let observed = Array3::from_elem((8, 2, 2), 3.0);
    let predicted = &observed - &e.errors;
    let corrected = apply_bias(predicted.view(), &fit_bias(&e).unwrap()).unwrap();
    let ce = ErrorArray::from_forecasts(observed.view(), corrected.view(), e.t_indices.clone()).unwrap();
    assert_eq!(grand_mean(&e, Metric::Mae) - grand_mean(&ce, Metric::Mae), 0.5);
}

#[test]
fn moments_match_two_pass_oracle() {
    let e = random_errors(7, 25, 3, 3, 0.2);
    let (mean, sd) = per_location_error_moments(&e).unwrap();
    for r in 0..3 {
        for c in 0..3 {
            let xs: Vec<f64> = (0..25).map(|t| e.errors[[t, r, c]]).collect();
            let m = xs.iter().sum::<f64>() / 25.0;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 24.0;
            assert!((mean[[r, c]] - m).abs() < 1e-12);
            assert!((sd[[r, c]] - v.sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn confidence_statistic_with_known_covariance() {
    // training errors with a diagonal covariance; the statistic of a test
    // error must equal the direct weighted sum of squares
    let e = random_errors(8, 400, 2, 2, 0.0);
    let region = ConfidenceRegion::from_training_errors(&e, 0.05).unwrap();
    assert_eq!(region.p(), 4);
    let cov = region.covariance_estimate().clone();
    let observed = ndarray::array![[1.0, 0.5], [-0.3, 0.8]];
    let pred = ndarray::Array2::<f64>::zeros((2, 2));
    let (stat, inside) = confidence_region(&region, observed.view(), pred.view()).unwrap();
    let d = ndarray::Array1::from(vec![1.0, 0.5, -0.3, 0.8]);
    // solve cov x = d by Gaussian elimination as an oracle
    let mut a = cov.clone();
    let mut b = d.clone();
    for k in 0..4 {
        for i in k + 1..4 {
            let f = a[[i, k]] / a[[k, k]];
            for j in k..4 {
                a[[i, j]] -= f * a[[k, j]];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = ndarray::Array1::<f64>::zeros(4);
    for i in (0..4).rev() {
        let s: f64 = (i + 1..4).map(|j| a[[i, j]] * x[j]).sum();
        x[i] = (b[i] - s) / a[[i, i]];
    }
    assert!((stat - d.dot(&x)).abs() < 1e-10);
    assert_eq!(inside, stat <= chi2_quantile(4, 0.05).unwrap());
}

proptest! {
    #[test]
    fn sign_is_scale_invariant(diffs in prop::collection::vec(-5.0f64..5.0, 2..40), k in 0.01f64..100.0) {
        let scaled: Vec<f64> = diffs.iter().map(|d| d * k).collect();
        prop_assert_eq!(
            classify_sign(paired_diff_ci(&diffs).unwrap()),
            classify_sign(paired_diff_ci(&scaled).unwrap())
        );
    }

    #[test]
    fn rmse_and_plain_improvements_agree_in_sign(m in 0.01f64..10.0, r in 0.01f64..10.0) {
        let a = improvement_pct(m, r, true).unwrap();
        let b = improvement_pct(m, r, false).unwrap();
        prop_assert!(a.signum() == b.signum() || a == 0.0 && b == 0.0);
    }

    #[test]
    fn chi2_quantile_increases(dof in 1usize..50, a in 0.01f64..0.5) {
        let q = chi2_quantile(dof, a).unwrap();
        prop_assert!(chi2_quantile(dof, a / 2.0).unwrap() > q);
        prop_assert!(chi2_quantile(dof + 1, a).unwrap() > q);
    }

    #[test]
    fn correlation_is_symmetric_and_bounded(seed in 0u64..1000) {
        let mut rng = seeded(seed);
        let series: Vec<Vec<f64>> = (0..5).map(|_| (0..30).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let c = correlation_matrix(&series).unwrap();
        for i in 0..5 {
            prop_assert_eq!(c.matrix[[i, i]], 1.0);
            for j in 0..5 {
                prop_assert_eq!(c.matrix[[i, j]], c.matrix[[j, i]]);
                prop_assert!(c.matrix[[i, j]].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn quantiles_are_monotone(xs in prop::collection::vec(0.0f64..3.0, 1..60)) {
        let q = quantiles(&xs, &[0.025, 0.25, 0.5, 0.75, 0.975]).unwrap();
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
    }
}
