use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2, Array3, Axis};
use rand::seq::SliceRandom;

use super::config::{file_digest, Resolver, RunDir};
use super::{ArimaCompareArgs, EvaluateArgs, GenSynthArgs, SchemeArg, TrainArgs};
use crate::baselines::{
    arima_test_protocol, fit_monthly_means, meanvalue_forecasts, MonthlyMeans, ProtocolConfig, ORDER_P_MAX, ORDER_Q_MAX,
};
use crate::evaluation::{
    acf, apply_bias, classify_sign, confidence_region, correlation_matrix, error_sequence_and_matrix, fit_bias,
    grand_mean, improvement_pct, paired_diff_ci, per_location_acf, per_location_error_moments, quantiles,
    relative_errors, summarize, ConfidenceRegion, ErrorArray, Histogram, Metric, SummaryRow, RELATIVE_ERROR_FLOOR,
};
use crate::griddata::{
    block_average, make_samples, read_grid_file, write_grid_file, GridSeries, SampleRates, SampleSet, Split,
    SplitScheme, SplitSpec,
};
use crate::neuralnet::{
    encode_checkpoint, predict_samples, read_checkpoint, train, Architecture, CompositeModel, TrainConfig,
};
use crate::synthgen::{generate, SynthConfig};
use crate::{rng, Error, Result};

pub const TABLE_B_HEADER: &str = "quantile,location_row,location_col,d,error_type,n,lower,upper,sign";

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

/// Generates a synthetic series into `<run>/data.wndf`.
pub fn cmd_gen_synth(args: &GenSynthArgs) -> Result<PathBuf> {
    let mut r = Resolver::new("gen-synth", args.run.config.as_deref())?;
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        height: r.value("height", args.height, d.height)?,
        width: r.value("width", args.width, d.width)?,
        t_len_hours: r.value("t_len_hours", args.hours, d.t_len_hours)?,
        seed: r.value("seed", args.seed, d.seed)?,
        base_mean: r.value("base_mean", args.base_mean, d.base_mean)?,
        season_amplitude: r.value("season_amplitude", args.season_amplitude, d.season_amplitude)?,
        period_hours: r.value("period_hours", args.period_hours, d.period_hours)?,
        spatial_smooth_radius: r.value("spatial_smooth_radius", args.smooth_radius, d.spatial_smooth_radius)?,
        temporal_ar_coefficient: r.value(
            "temporal_ar_coefficient",
            args.ar_coefficient,
            d.temporal_ar_coefficient,
        )?,
        noise_sd: r.value("noise_sd", args.noise_sd, d.noise_sd)?,
        start_month: r.value("start_month", args.start_month, d.start_month)?,
    };
    let (out, tag) = r.placement(args.run.out.clone(), args.run.tag.clone())?;
    let manifest = r.finish()?;
    cfg.validate()?;
    let series = generate(&cfg)?;
    let mut run = RunDir::create(&out, &tag, &manifest)?;
    let path = run.track("data.wndf");
    write_grid_file(&path, &series)?;
    Ok(run.finish())
}

fn load_hourly(path: &Path) -> Result<GridSeries> {
    let series = read_grid_file(path)?;
    if series.step_hours() != 1 {
        return Err(Error::Input(format!(
            "{} holds {}-hour steps; an hourly series is required",
            path.display(),
            series.step_hours()
        )));
    }
    Ok(series)
}

/// Trains on a WNDF file; writes `model.wndm` and `history.csv`.
pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf> {
    let mut r = Resolver::new("train", args.run.config.as_deref())?;
    let data: PathBuf = r.required("data", args.data.as_ref().map(|p| path_string(p)))?.into();
    let scheme = r.value("scheme", args.scheme, SchemeArg(SplitScheme::SixHour))?.0;
    let d = TrainConfig::default();
    let standard = SplitSpec::standard(scheme, 0);
    let config = TrainConfig {
        epochs: r.value("epochs", args.epochs, d.epochs)?,
        batch_size: r.value("batch", args.batch, d.batch_size)?,
        lambda_reg: r.value("lambda", args.lambda, d.lambda_reg)?,
        alpha: r.value("alpha", args.alpha, d.alpha)?,
        gamma: r.value("gamma", args.gamma, d.gamma)?,
        momentum_beta: r.value("momentum", args.momentum, d.momentum_beta)?,
        seed: r.value("seed", args.seed, d.seed)?,
        early_stop_patience: r.value("patience", args.patience, d.early_stop_patience)?,
    };
    let split_seed = r.value("split_seed", args.split_seed, 0u64)?;
    let train_rate = r.value("train_rate", args.train_rate, standard.sample_rates.train)?;
    r.derived("data_sha256", file_digest(&data)?)?;
    let (out, tag) = r.placement(args.run.out.clone(), args.run.tag.clone())?;
    let manifest = r.finish()?;
    config.validate()?;

    let raw = load_hourly(&data)?;
    let blocks = block_average(&raw, scheme.block_hours())?;
    let spec = SplitSpec {
        scheme,
        sample_rates: SampleRates {
            train: train_rate,
            ..standard.sample_rates
        },
        seed: split_seed,
    };
    let samples = make_samples(&blocks, scheme.n_lags(), &spec)?;
    let arch = Architecture::standard(raw.height(), raw.width(), scheme.n_lags(), scheme.block_hours());
    let mut run = RunDir::create(&out, &tag, &manifest)?;
    let (model, history) = train(&samples, &config, &arch)?;
    run.write("model.wndm", &encode_checkpoint(&model))?;
    run.write("history.csv", history.to_csv().as_bytes())?;
    Ok(run.finish())
}

/// Model inputs, checkpoint and derived sample set shared by the
/// evaluation commands. Every admissible anchor is kept.
struct Scored {
    raw: GridSeries,
    blocks: GridSeries,
    samples: SampleSet,
    model: CompositeModel,
}

fn load_scored(checkpoint: &Path, data: &Path) -> Result<Scored> {
    let model = read_checkpoint(checkpoint)?;
    let raw = load_hourly(data)?;
    if (raw.height(), raw.width()) != (model.arch.height, model.arch.width) {
        return Err(Error::shape(
            "evaluate",
            format!(
                "data grid {}x{} vs checkpoint grid {}x{}",
                raw.height(),
                raw.width(),
                model.arch.height,
                model.arch.width
            ),
        ));
    }
    let scheme = SplitScheme::from_block_hours(model.arch.block_hours).ok_or_else(|| {
        Error::Input(format!(
            "checkpoint block length {} is neither 6 nor 24 hours",
            model.arch.block_hours
        ))
    })?;
    let blocks = block_average(&raw, scheme.block_hours())?;
    let spec = SplitSpec {
        scheme,
        sample_rates: SampleRates::all(1.0),
        seed: 0,
    };
    let samples = make_samples(&blocks, model.arch.n_lags, &spec)?;
    Ok(Scored {
        raw,
        blocks,
        samples,
        model,
    })
}

/// Observed labels, network predictions and the two baselines for one split.
struct SplitForecasts {
    t_indices: Vec<usize>,
    observed: Array3<f64>,
    ann: Array3<f64>,
    persistence: Array3<f64>,
    meanvalue: Option<Array3<f64>>,
}

fn split_forecasts(s: &Scored, split: Split, mm: Option<&MonthlyMeans>, clamp: bool) -> Result<Option<SplitForecasts>> {
    let idx = s.samples.indices(split);
    if idx.is_empty() {
        return Ok(None);
    }
    let (h, w) = s.samples.grid_shape();
    let anchors: Vec<usize> = idx.iter().map(|&i| s.samples.anchors()[i]).collect();
    let mut observed = Array3::zeros((idx.len(), h, w));
    let mut persistence = Array3::zeros((idx.len(), h, w));
    for (k, &i) in idx.iter().enumerate() {
        observed.index_axis_mut(Axis(0), k).assign(&s.samples.label(i));
        let lags = s.samples.input(i);
        persistence
            .index_axis_mut(Axis(0), k)
            .assign(&lags.index_axis(Axis(0), lags.len_of(Axis(0)) - 1));
    }
    let mut ann = predict_samples(&s.model, &s.samples, &idx)?;
    if clamp {
        ann.mapv_inplace(|v| v.max(0.0));
    }
    let meanvalue = mm.map(|mm| meanvalue_forecasts(mm, &s.blocks, &anchors)).transpose()?;
    Ok(Some(SplitForecasts {
        t_indices: anchors.iter().map(|a| a * s.samples.block_hours() as usize).collect(),
        observed,
        ann,
        persistence,
        meanvalue,
    }))
}

impl SplitForecasts {
    fn errors(&self, predicted: &Array3<f64>) -> Result<ErrorArray> {
        ErrorArray::from_forecasts(self.observed.view(), predicted.view(), self.t_indices.clone())
    }
}

fn monthly_means(s: &Scored) -> Result<MonthlyMeans> {
    let train = s.samples.partitions().range(Split::Train);
    let bh = s.samples.block_hours() as usize;
    let hours = s.raw.slice_steps(train.start * bh, train.end * bh)?;
    fit_monthly_means(&hours)
}

fn csv_f(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NaN".into()
    }
}

/// Scores a checkpoint; writes summary tables, heatmaps and diagnostics.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<PathBuf> {
    let mut r = Resolver::new("evaluate", args.run.config.as_deref())?;
    let checkpoint: PathBuf = r
        .required("checkpoint", args.checkpoint.as_ref().map(|p| path_string(p)))?
        .into();
    let data: PathBuf = r.required("data", args.data.as_ref().map(|p| path_string(p)))?.into();
    let floor = r.value("relative_floor", args.relative_floor, RELATIVE_ERROR_FLOOR)?;
    let conf_alpha = r.value("confidence_alpha", args.confidence_alpha, 0.05)?;
    let bias_correct = r.value("bias_correct", args.bias_correct, true)?;
    let clamp = r.value("clamp_negative", args.clamp_negative, false)?;
    let acf_max_lag = r.value("acf_max_lag", args.acf_max_lag, 40usize)?;
    r.derived("checkpoint_sha256", file_digest(&checkpoint)?)?;
    r.derived("data_sha256", file_digest(&data)?)?;
    let (out, tag) = r.placement(args.run.out.clone(), args.run.tag.clone())?;
    let manifest = r.finish()?;

    let scored = load_scored(&checkpoint, &data)?;
    let mut notes = String::new();
    let mm = match monthly_means(&scored) {
        Ok(mm) => Some(mm),
        Err(e) => {
            writeln!(notes, "mean-value model skipped: {e}").unwrap();
            None
        }
    };
    let test = split_forecasts(&scored, Split::Test, mm.as_ref(), clamp)?
        .ok_or_else(|| Error::InsufficientData("the test partition has no admissible anchors".into()))?;
    let mut run = RunDir::create(&out, &tag, &manifest)?;

    let mut models: Vec<(&str, ErrorArray)> = vec![
        ("ann", test.errors(&test.ann)?),
        ("persistence", test.errors(&test.persistence)?),
    ];
    if let Some(mv) = &test.meanvalue {
        models.push(("meanvalue", test.errors(mv)?));
    }

    // bias correction from the training partition
    let train = split_forecasts(&scored, Split::Train, None, clamp)?;
    let mut bias_rows = String::from("split,metric,uncorrected,corrected\n");
    if bias_correct {
        match &train {
            Some(tr) => {
                let bc = fit_bias(&tr.errors(&tr.ann)?)?;
                let val = split_forecasts(&scored, Split::Validation, None, clamp)?;
                for (name, sf) in [("train", Some(tr)), ("validation", val.as_ref()), ("test", Some(&test))] {
                    let Some(sf) = sf else { continue };
                    let before = sf.errors(&sf.ann)?;
                    let after = sf.errors(&apply_bias(sf.ann.view(), &bc)?)?;
                    for metric in [Metric::Mse, Metric::Mae] {
                        writeln!(
                            bias_rows,
                            "{name},{},{},{}",
                            metric.name(),
                            grand_mean(&before, metric),
                            grand_mean(&after, metric)
                        )
                        .unwrap();
                    }
                    if name == "test" {
                        models.push(("ann_bias_corrected", after));
                    }
                }
                run.write("bias_correction.csv", bias_rows.as_bytes())?;
                let train_err = tr.errors(&apply_bias(tr.ann.view(), &bc)?)?;
                match ConfidenceRegion::from_training_errors(&train_err, conf_alpha) {
                    Ok(region) => {
                        let corrected = apply_bias(test.ann.view(), &bc)?;
                        let mut inside = 0;
                        for k in 0..test.t_indices.len() {
                            let (_, ok) = confidence_region(
                                &region,
                                test.observed.index_axis(Axis(0), k),
                                corrected.index_axis(Axis(0), k),
                            )?;
                            inside += ok as usize;
                        }
                        let n = test.t_indices.len();
                        run.write(
                            "confidence_region.csv",
                            format!(
                                "alpha,dimension,threshold,test_points,inside,coverage\n{conf_alpha},{},{},{n},{inside},{}\n",
                                region.p(),
                                region.threshold(),
                                inside as f64 / n as f64
                            )
                            .as_bytes(),
                        )?;
                    }
                    Err(e) => writeln!(notes, "confidence region skipped: {e}").unwrap(),
                }
            }
            None => writeln!(notes, "bias correction skipped: the training partition has no anchors").unwrap(),
        }
    }

    // summaries, sequences and matrices
    let mut rows = Vec::new();
    let mut seq_columns: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, errs) in &models {
        for metric in [Metric::Mse, Metric::Mae] {
            let (seq, mat) = error_sequence_and_matrix(errs, metric)?;
            for (aggregation, values) in [("sequence", seq.to_vec()), ("matrix", mat.iter().copied().collect())] {
                rows.push(SummaryRow {
                    model: name.to_string(),
                    metric: metric.name().into(),
                    aggregation: aggregation.into(),
                    summary: summarize(&values)?,
                });
            }
            let stem = format!("{}_matrix_{name}", metric.name().to_lowercase());
            let csv = run.track(&format!("{stem}.csv"));
            crate::evaluation::write_field_csv(&csv, mat.view())?;
            let pgm = run.track(&format!("{stem}.pgm"));
            run.track(&format!("{stem}.pgm.txt"));
            crate::evaluation::write_pgm(&pgm, mat.view())?;
            seq_columns.push((format!("{name}_{}", metric.name().to_lowercase()), seq.to_vec()));
        }
    }
    run.write("summary.csv", SummaryRow::table(&rows).as_bytes())?;

    let mut seq_csv = String::from("t_index");
    for (name, _) in &seq_columns {
        write!(seq_csv, ",{name}").unwrap();
    }
    seq_csv.push('\n');
    for (k, t) in test.t_indices.iter().enumerate() {
        write!(seq_csv, "{t}").unwrap();
        for (_, col) in &seq_columns {
            write!(seq_csv, ",{}", col[k]).unwrap();
        }
        seq_csv.push('\n');
    }
    run.write("sequences.csv", seq_csv.as_bytes())?;

    // improvement of the network over each reference
    let mut imp = String::from("model,reference,metric,improvement_pct\n");
    let ann_err = &models[0].1;
    for (reference, errs) in models
        .iter()
        .skip(1)
        .filter(|(n, _)| *n == "persistence" || *n == "meanvalue")
    {
        for (metric, as_rmse, label) in [(Metric::Mse, true, "RMSE"), (Metric::Mae, false, "MAE")] {
            let v = improvement_pct(grand_mean(ann_err, metric), grand_mean(errs, metric), as_rmse);
            match v {
                Ok(v) => writeln!(imp, "ann,{reference},{label},{v}").unwrap(),
                Err(e) => {
                    writeln!(imp, "ann,{reference},{label},NaN").unwrap();
                    writeln!(notes, "improvement over {reference} ({label}) undefined: {e}").unwrap();
                }
            }
        }
    }
    run.write("improvement.csv", imp.as_bytes())?;

    // relative errors
    let qs = [0.025, 0.25, 0.5, 0.75, 0.975];
    let mut rel = String::from("model,q0.025,q0.25,q0.5,q0.75,q0.975,count,excluded\n");
    for (name, errs) in &models {
        match relative_errors(errs, test.observed.view(), floor) {
            Ok(re) => {
                let q = quantiles(&re.values, &qs)?;
                let cells: Vec<String> = q.iter().map(|v| v.to_string()).collect();
                writeln!(rel, "{name},{},{},{}", cells.join(","), re.values.len(), re.excluded).unwrap();
            }
            Err(e) => writeln!(notes, "relative errors for {name} skipped: {e}").unwrap(),
        }
    }
    run.write("relative_errors.csv", rel.as_bytes())?;

    // error moments per split for the network
    let val = split_forecasts(&scored, Split::Validation, None, clamp)?;
    for (name, sf) in [
        ("train", train.as_ref()),
        ("validation", val.as_ref()),
        ("test", Some(&test)),
    ] {
        let Some(sf) = sf else { continue };
        match per_location_error_moments(&sf.errors(&sf.ann)?) {
            Ok((mean, sd)) => {
                for (kind, field) in [("mean", mean), ("sd", sd)] {
                    let p = run.track(&format!("error_{kind}_{name}.csv"));
                    crate::evaluation::write_field_csv(&p, field.view())?;
                }
            }
            Err(e) => writeln!(notes, "error moments for {name} skipped: {e}").unwrap(),
        }
    }

    // autocorrelation of network errors
    let lags: Vec<usize> = (1..=4).collect();
    let loc = per_location_acf(ann_err, &lags);
    let spatial_mean: Vec<f64> = ann_err
        .errors
        .axis_iter(Axis(0))
        .map(|f| f.mean().unwrap_or(0.0))
        .collect();
    let max_lag = acf_max_lag.min(spatial_mean.len().saturating_sub(2));
    let sm_lags: Vec<usize> = (1..=max_lag).collect();
    let sm = acf(&spatial_mean, &sm_lags);
    if let Err(e) = &sm {
        writeln!(notes, "spatial-mean error autocorrelation skipped: {e}").unwrap();
    }
    let mut acf_csv = String::from("lag,mean_location_acf,spatial_mean_acf\n");
    for lag in 1..=max_lag.max(4) {
        let l = match (&loc, lag <= 4) {
            (Ok(a), true) => {
                let vals: Vec<f64> = a
                    .index_axis(Axis(0), lag - 1)
                    .iter()
                    .copied()
                    .filter(|v| v.is_finite())
                    .collect();
                if vals.is_empty() {
                    f64::NAN
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                }
            }
            _ => f64::NAN,
        };
        let g = sm
            .as_ref()
            .ok()
            .and_then(|v| v.get(lag - 1).copied())
            .unwrap_or(f64::NAN);
        writeln!(acf_csv, "{lag},{},{}", csv_f(l), csv_f(g)).unwrap();
    }
    run.write("acf.csv", acf_csv.as_bytes())?;

    // spatial correlation of network errors, points in row-major order
    let (h, w) = ann_err.grid_shape();
    let points: Vec<Vec<f64>> = (0..h * w)
        .map(|k| ann_err.errors.slice(s![.., k / w, k % w]).to_vec())
        .collect();
    match correlation_matrix(&points) {
        Ok(c) => {
            let edges = Histogram::bin_edges();
            let mut hist = String::from("bin_lower,bin_upper,count\n");
            for (k, n) in c.histogram.counts.iter().enumerate() {
                writeln!(hist, "{},{},{n}", edges[k], edges[k + 1]).unwrap();
            }
            run.write("correlation_histogram.csv", hist.as_bytes())?;
            if !c.missing.is_empty() {
                writeln!(
                    notes,
                    "{} locations have constant errors and no correlation",
                    c.missing.len()
                )
                .unwrap();
            }
        }
        Err(e) => writeln!(notes, "error correlation skipped: {e}").unwrap(),
    }

    run.write("notes.txt", notes.as_bytes())?;
    Ok(run.finish())
}

/// Grid cells whose network test MSE sits at the 0, .25, .5, .75 and 1
/// quantiles (nearest rank, ties by row-major order).
fn ranked_locations(mse: &Array2<f64>) -> Vec<(f64, usize, usize)> {
    let w = mse.ncols();
    let mut order: Vec<usize> = (0..mse.len()).collect();
    order.sort_by(|&a, &b| mse[[a / w, a % w]].total_cmp(&mse[[b / w, b % w]]).then(a.cmp(&b)));
    [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&q| {
            let k = order[(q * (order.len() - 1) as f64).round() as usize];
            (q, k / w, k % w)
        })
        .collect()
}

/// Up to `per_month` test anchors from each (year, month) of the test
/// partition, drawn with the seeded generator; returned in time order.
fn sample_anchors(s: &Scored, per_month: usize, seed: u64) -> Vec<usize> {
    let mut groups: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for i in s.samples.indices(Split::Test) {
        let a = s.samples.anchors()[i];
        let year = s.blocks.hour_of_step(a) / 8760;
        groups.entry((year, s.blocks.month_of_step(a))).or_default().push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut chosen = Vec::new();
    for (_, mut members) in groups {
        members.shuffle(&mut rng);
        members.truncate(per_month);
        chosen.extend(members);
    }
    chosen.sort_unstable();
    chosen
}

/// Paired network-versus-ARIMA intervals at five ranked locations.
pub fn cmd_arima_compare(args: &ArimaCompareArgs) -> Result<PathBuf> {
    let mut r = Resolver::new("arima-compare", args.run.config.as_deref())?;
    let checkpoint: PathBuf = r
        .required("checkpoint", args.checkpoint.as_ref().map(|p| path_string(p)))?
        .into();
    let data: PathBuf = r.required("data", args.data.as_ref().map(|p| path_string(p)))?.into();
    let per_month = r.value("anchors_per_month", args.anchors_per_month, 4usize)?;
    let window_hours = r.value("window_hours", args.window_hours, 6000usize)?;
    let p_max = r.value("p_max", args.p_max, ORDER_P_MAX)?;
    let q_max = r.value("q_max", args.q_max, ORDER_Q_MAX)?;
    let seed = r.value("seed", args.seed, 0u64)?;
    r.derived("checkpoint_sha256", file_digest(&checkpoint)?)?;
    r.derived("data_sha256", file_digest(&data)?)?;
    let (out, tag) = r.placement(args.run.out.clone(), args.run.tag.clone())?;
    let manifest = r.finish()?;

    let scored = load_scored(&checkpoint, &data)?;
    let bh = scored.samples.block_hours() as usize;
    let cfg = ProtocolConfig {
        block_hours: bh,
        window_hours,
        d_set: vec![0, 1],
        p_max,
        q_max,
    };
    cfg.validate()?;
    let test = split_forecasts(&scored, Split::Test, None, false)?
        .ok_or_else(|| Error::InsufficientData("the test partition has no admissible anchors".into()))?;
    let (_, mse) = error_sequence_and_matrix(&test.errors(&test.ann)?, Metric::Mse)?;
    let locations = ranked_locations(&mse);

    let chosen = sample_anchors(&scored, per_month, seed);
    let test_idx = scored.samples.indices(Split::Test);
    let ann = predict_samples(&scored.model, &scored.samples, &chosen)?;
    let anchor_hours: Vec<usize> = chosen.iter().map(|&i| scored.samples.anchors()[i] * bh).collect();
    debug_assert!(chosen.iter().all(|i| test_idx.contains(i)));

    let mut run = RunDir::create(&out, &tag, &manifest)?;
    let mut notes = String::new();
    let mut forecasts = String::new();
    // (d, error type, location rank) -> (n, lower, upper, sign)
    let mut table: BTreeMap<(usize, usize, usize), String> = BTreeMap::new();
    for (rank, &(q, row, col)) in locations.iter().enumerate() {
        let series = scored.raw.point_series(row, col);
        let result = arima_test_protocol(&series, &anchor_hours, &cfg)?;
        forecasts.push_str(&result.to_csv(row, col, rank == 0));
        for skip in &result.skipped {
            writeln!(
                notes,
                "location ({row},{col}) anchor {}: {}",
                skip.anchor_t, skip.reason
            )
            .unwrap();
        }
        for d in [0usize, 1] {
            let mut abs_diff = Vec::new();
            let mut sq_diff = Vec::new();
            for arima in result.rows.iter().filter(|x| x.d == d) {
                let k = anchor_hours
                    .iter()
                    .position(|&a| a == arima.anchor_t)
                    .expect("anchor from the list");
                let i = chosen[k];
                let e_ann = scored.samples.label(i)[[row, col]] - ann[[k, row, col]];
                abs_diff.push(e_ann.abs() - arima.error.abs());
                sq_diff.push(e_ann * e_ann - arima.error * arima.error);
            }
            for (kind, diffs) in [(0usize, &abs_diff), (1, &sq_diff)] {
                let line = match paired_diff_ci(diffs) {
                    Ok(ci) => format!("{},{},{},{}", diffs.len(), ci.0, ci.1, classify_sign(ci)),
                    Err(e) => {
                        writeln!(notes, "location ({row},{col}) d={d}: {e}").unwrap();
                        format!("{},NaN,NaN,NA", diffs.len())
                    }
                };
                table.insert(
                    (d, kind, rank),
                    format!("{q},{row},{col},{d},{},{line}", ["absolute", "squared"][kind]),
                );
            }
        }
    }
    let mut csv = format!("{TABLE_B_HEADER}\n");
    for line in table.values() {
        csv.push_str(line);
        csv.push('\n');
    }
    run.write("table_b.csv", csv.as_bytes())?;
    run.write("arima_forecasts.csv", forecasts.as_bytes())?;
    let mut loc_csv = String::from("quantile,location_row,location_col,ann_test_mse\n");
    for (q, row, col) in &locations {
        writeln!(loc_csv, "{q},{row},{col},{}", mse[[*row, *col]]).unwrap();
    }
    run.write("locations.csv", loc_csv.as_bytes())?;
    run.write("notes.txt", notes.as_bytes())?;
    Ok(run.finish())
}
