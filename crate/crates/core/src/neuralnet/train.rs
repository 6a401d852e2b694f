//! Minibatch training with early stopping, and inference in m/s.

use ndarray::{Array2, Array3, ArrayView3};
use rand::seq::SliceRandom;

use super::model::{forward_many, gradients_with, loss_with, model_forward, Architecture, CompositeModel, Parameters};
use super::optim::{lookahead, rmsprop_step, OptimizerState, TrainConfig};
use crate::griddata::{block_average_window, fit_scale, scale, unscale, SampleSet, Split};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// One-based epoch number.
    pub epoch: usize,
    /// Sample-weighted mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    /// Loss over the whole validation partition after the epoch.
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept, if any training happened.
    pub best_epoch: Option<usize>,
}

impl History {
    /// `epoch,train_loss,val_loss` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{:.10e},{:.10e}\n", r.epoch, r.train_loss, r.val_loss));
        }
        out
    }
}

/// Loss over many samples, evaluated in chunks.
fn chunked_loss(
    arch: &Architecture,
    params: &Parameters,
    samples: &SampleSet,
    indices: &[usize],
    lambda: f64,
    chunk: usize,
) -> Result<f64> {
    let mut data = 0.0;
    for part in indices.chunks(chunk.max(1)) {
        data += loss_with(arch, params, samples, part, 0.0)? * part.len() as f64;
    }
    Ok(data / indices.len() as f64 + lambda * params.penalty_sum())
}

/// Trains a model on `samples` (in m/s; scaling is fitted here on the
/// training partition).
///
/// Parameters start from the seeded Glorot scheme. Each epoch shuffles the
/// training samples, walks them in minibatches and applies one RMSprop step
/// per batch. The parameters with the lowest validation loss are returned;
/// training stops after `early_stop_patience` epochs without improvement or at
/// the epoch cap.
pub fn train(samples: &SampleSet, config: &TrainConfig, arch: &Architecture) -> Result<(CompositeModel, History)> {
    train_with_progress(samples, config, arch, |_| {})
}

/// [`train`], calling `on_epoch` after every completed epoch.
pub fn train_with_progress(
    samples: &SampleSet,
    config: &TrainConfig,
    arch: &Architecture,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(CompositeModel, History)> {
    config.validate()?;
    arch.validate()?;
    let (h, w) = samples.grid_shape();
    if (h, w) != (arch.height, arch.width) || samples.n_lags() != arch.n_lags {
        return Err(Error::shape(
            "train",
            format!(
                "samples are {h}x{w} with {} lags, architecture {}x{} with {}",
                samples.n_lags(),
                arch.height,
                arch.width,
                arch.n_lags
            ),
        ));
    }
    let scale_params = fit_scale(samples.train_blocks())?;
    let scaled = samples.map_blocks(|b| scale(b, &scale_params));
    let mut rng = rng::seeded(config.seed);
    let mut params = Parameters::glorot_from(arch, &mut rng);
    let mut history = History::default();
    if config.epochs == 0 {
        return Ok((CompositeModel::new(*arch, params, scale_params)?, history));
    }
    let mut train_idx = scaled.indices(Split::Train);
    let val_idx = scaled.indices(Split::Validation);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} training and {} validation samples",
            train_idx.len(),
            val_idx.len()
        )));
    }
    let mut state = OptimizerState::new(&params);
    let mut best = (f64::INFINITY, params.clone(), 0usize);
    let mut stale = 0;
    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (batch_no, batch) in train_idx.chunks(config.batch_size).enumerate() {
            let (loss, grads) = if config.momentum_beta > 0.0 {
                let ahead = lookahead(&params, &state, config);
                gradients_with(arch, &ahead, &scaled, batch, config.lambda_reg)?
            } else {
                gradients_with(arch, &params, &scaled, batch, config.lambda_reg)?
            };
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_no,
                    loss,
                });
            }
            weighted += loss * batch.len() as f64;
            rmsprop_step(&mut state, &mut params, &grads, config)?;
            if !params.all_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_no,
                    loss: f64::NAN,
                });
            }
        }
        let train_loss = weighted / train_idx.len() as f64;
        let val_loss = chunked_loss(
            arch,
            &params,
            &scaled,
            &val_idx,
            config.lambda_reg,
            config.batch_size.max(64),
        )?;
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: train_idx.len().div_ceil(config.batch_size),
                loss: val_loss,
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
        };
        on_epoch(&record);
        history.epochs.push(record);
        if val_loss < best.0 {
            best = (val_loss, params.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.early_stop_patience {
                break;
            }
        }
    }
    history.best_epoch = Some(best.2);
    Ok((CompositeModel::new(*arch, best.1, scale_params)?, history))
}

/// Predictions in m/s for the listed samples of an unscaled sample set,
/// `len × H × W`, computed in chunks.
pub fn predict_samples(model: &CompositeModel, samples: &SampleSet, indices: &[usize]) -> Result<Array3<f64>> {
    let (h, w) = samples.grid_shape();
    let mut out = Array3::<f64>::zeros((indices.len(), h, w));
    for (c, chunk) in indices.chunks(256).enumerate() {
        let scaled: Vec<Array3<f64>> = chunk
            .iter()
            .map(|&i| {
                if i >= samples.len() {
                    return Err(Error::Input(format!("sample index {i} out of range")));
                }
                Ok(scale(samples.input(i), &model.scale))
            })
            .collect::<Result<_>>()?;
        let views: Vec<_> = scaled.iter().map(|a| a.view()).collect();
        let pred = unscale(forward_many(model, &views)?.view(), &model.scale);
        out.slice_mut(ndarray::s![c * 256..c * 256 + chunk.len(), .., ..])
            .assign(&pred);
    }
    Ok(out)
}

/// Forecast of the next block in m/s from the most recent
/// `block_hours · n_lags` hourly fields.
pub fn predict(model: &CompositeModel, hourly_window: ArrayView3<f64>) -> Result<Array2<f64>> {
    let need = model.arch.block_hours as usize * model.arch.n_lags;
    if hourly_window.len_of(ndarray::Axis(0)) != need {
        return Err(Error::Input(format!(
            "window holds {} hours, model needs {need}",
            hourly_window.len_of(ndarray::Axis(0))
        )));
    }
    let blocks = block_average_window(hourly_window, model.arch.block_hours as usize);
    let scaled = scale(blocks.view(), &model.scale);
    let out = model_forward(model, scaled.view())?;
    Ok(unscale(out.view(), &model.scale))
}
