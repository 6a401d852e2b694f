//! Convolution as a sparse matrix: the 4x16 pattern of a 3x3 kernel over a
//! 4x4 input, transposed convolution as `Cᵀx + b`, and ridge deconvolution.
//!
//! cargo run --example conv_algebra

use ndarray::{array, Array1, Array2};
use windfield::neuralnet::{build_conv_matrix, ridge_deconvolve, tconv2d, TransConvLayer};

fn main() -> windfield::Result<()> {
    let kernel = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]];
    let c = build_conv_matrix(kernel.view(), (4, 4))?;
    println!(
        "C is {}x{} with {} nonzeros; kernel index at each position:",
        c.rows,
        c.cols,
        c.entries.len()
    );
    for row in c.pattern() {
        let cells: Vec<String> = row
            .iter()
            .map(|e| match e {
                Some((i, j)) => format!("w{i}{j}"),
                None => " 0 ".into(),
            })
            .collect();
        println!("  {}", cells.join(" "));
    }

    // transposed convolution of a 2x2 field equals Cᵀx plus the bias
    let x = array![[0.5, -1.0], [2.0, 0.25]];
    let layer = TransConvLayer {
        kernel: kernel.clone(),
        bias: 0.1,
    };
    let y = tconv2d(x.view(), &layer)?;
    let flat: Array1<f64> = x.iter().copied().collect();
    let ct = c.transpose_matvec(flat.view()) + 0.1;
    let gap = y.iter().zip(ct.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("tconv output 4x4, max |tconv - (Cᵀx + b)| = {gap:.2e}");

    // recover an input from its convolution
    let truth: Array2<f64> = Array2::from_shape_fn((4, 4), |(i, j)| ((i * 4 + j) as f64).sin());
    let signal: Array1<f64> = truth.iter().copied().collect();
    let observed = c.matvec(signal.view());
    let dense = c.to_dense();
    for lambda in [1e-3, 1e-1, 10.0] {
        let est = ridge_deconvolve(&dense, observed.view(), lambda)?;
        let resid = (&dense.dot(&est) - &observed).mapv(|v| v * v).sum().sqrt();
        println!(
            "lambda {lambda:>6}: |x| = {:.4}, |Cx - y| = {resid:.4}",
            est.mapv(|v| v * v).sum().sqrt()
        );
    }
    Ok(())
}
