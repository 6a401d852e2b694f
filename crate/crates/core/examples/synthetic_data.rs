//! Generate a synthetic hourly series, round-trip it through a WNDF file and
//! print a few exploratory statistics.
//!
//! cargo run --release --example synthetic_data

use windfield::griddata::{block_average, field_stats, read_grid_file, write_grid_file};
use windfield::synthgen::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        height: 12,
        width: 12,
        t_len_hours: 4000,
        period_hours: 2000,
        ..SynthConfig::default()
    };
    let series = generate(&cfg)?;
    println!(
        "generated {} hours on a {}x{} grid starting in month {}",
        series.t_len(),
        series.height(),
        series.width(),
        series.start_month()
    );

    let dir = std::env::temp_dir().join("windfield-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("synthetic.wndf");
    write_grid_file(&path, &series)?;
    let back = read_grid_file(&path)?;
    // values are stored as binary32
    let gap = back
        .values()
        .iter()
        .zip(series.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "wrote {} ({} bytes), max round-trip difference {gap:.1e} m/s",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let stats = field_stats(&series)?;
    let (lo, hi) = stats
        .mean
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("per-location mean wind speed: {lo:.2} .. {hi:.2} m/s");
    println!("cells with undefined coefficient of variation: {}", stats.cv_missing);

    for bh in [6, 24] {
        let blocks = block_average(&series, bh)?;
        println!(
            "{bh}-hour blocks: {} steps, first block month {}",
            blocks.t_len(),
            blocks.month_of_step(0)
        );
    }
    Ok(())
}
