//! Improvement percentages, chi-square quantiles and paired-difference
//! intervals with their sign classification.
//!
//! cargo run --example paired_inference

use rand::Rng;
use rand_distr::StandardNormal;
use windfield::evaluation::{chi2_quantile, classify_sign, improvement_pct, paired_diff_ci, Sign};
use windfield::rng;

fn main() -> windfield::Result<()> {
    // RMSE-based improvement from MSE values, and MAE-based improvement
    println!(
        "improvement (RMSE from MSE 0.9384 vs 1.7726): {:.2}%",
        improvement_pct(0.9384, 1.7726, true)?
    );
    println!(
        "improvement (MAE 0.7279 vs 0.9911): {:.2}%",
        improvement_pct(0.7279, 0.9911, false)?
    );

    for (dof, alpha) in [(1, 0.05), (2, 0.05), (10, 0.01), (256, 0.05)] {
        println!(
            "chi2 quantile, {dof} dof, alpha {alpha}: {:.6}",
            chi2_quantile(dof, alpha)?
        );
    }

    // per-anchor differences: model error minus reference error
    let mut g = rng::seeded(5);
    for shift in [-0.3, 0.0, 0.3] {
        let diffs: Vec<f64> = (0..120).map(|_| shift + g.sample::<f64, _>(StandardNormal)).collect();
        let ci = paired_diff_ci(&diffs)?;
        let sign = classify_sign(ci);
        let verdict = match sign {
            Sign::Negative => "model better",
            Sign::Positive => "reference better",
            Sign::Zero => "no significant difference",
        };
        println!(
            "shift {shift:+.1}: CI ({:.4}, {:.4}) sign {sign} -> {verdict}",
            ci.0, ci.1
        );
    }
    Ok(())
}
