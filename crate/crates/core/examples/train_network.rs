//! Train the composite network on a small synthetic grid with the 6-hour
//! scheme, save a checkpoint and compare test MSE with persistence.
//!
//! cargo run --release --example train_network [epochs]

use ndarray::Axis;
use windfield::griddata::{block_average, make_samples, Split, SplitScheme, SplitSpec};
use windfield::neuralnet::{
    predict_samples, read_checkpoint, train_with_progress, write_checkpoint, Architecture, TrainConfig,
};
use windfield::synthgen::{generate, SynthConfig};

fn main() -> windfield::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(300);
    let synth = SynthConfig {
        height: 8,
        width: 8,
        t_len_hours: 4000,
        period_hours: 2000,
        temporal_ar_coefficient: 0.7,
        ..SynthConfig::default()
    };
    let scheme = SplitScheme::SixHour;
    let blocks = block_average(&generate(&synth)?, scheme.block_hours())?;
    let samples = make_samples(&blocks, scheme.n_lags(), &SplitSpec::standard(scheme, 0))?;
    println!(
        "{} samples: {} train, {} validation, {} test",
        samples.len(),
        samples.indices(Split::Train).len(),
        samples.indices(Split::Validation).len(),
        samples.indices(Split::Test).len()
    );

    let arch = Architecture::standard(8, 8, scheme.n_lags(), scheme.block_hours());
    let config = TrainConfig {
        epochs,
        lambda_reg: 0.003,
        alpha: 0.002,
        early_stop_patience: 40,
        seed: 2,
        ..TrainConfig::default()
    };
    let (model, history) = train_with_progress(&samples, &config, &arch, |r| {
        if r.epoch % 25 == 0 {
            println!(
                "epoch {:>4}  train {:.4}  validation {:.4}",
                r.epoch, r.train_loss, r.val_loss
            );
        }
    })?;
    println!("best epoch {:?}", history.best_epoch);

    let path = std::env::temp_dir().join("windfield-example-model.wndm");
    write_checkpoint(&path, &model)?;
    let model = read_checkpoint(&path)?;
    println!("checkpoint {} (beta {:.3})", path.display(), model.scale.beta);

    let test = samples.indices(Split::Test);
    let pred = predict_samples(&model, &samples, &test)?;
    let (mut ann, mut pers) = (0.0, 0.0);
    for (k, &i) in test.iter().enumerate() {
        let y = samples.label(i);
        let input = samples.input(i);
        let last = input.index_axis(Axis(0), scheme.n_lags() - 1);
        ann += (&y - &pred.index_axis(Axis(0), k)).mapv(|v| v * v).mean().unwrap();
        pers += (&y - &last).mapv(|v| v * v).mean().unwrap();
    }
    let n = test.len() as f64;
    println!(
        "test MSE: network {:.4}, persistence {:.4}, ratio {:.3}",
        ann / n,
        pers / n,
        ann / pers
    );
    Ok(())
}
