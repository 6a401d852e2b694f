//! Independent oracles shared by the integration suites. Nothing here calls
//! into the code paths it checks.
#![allow(dead_code)]

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use windfield::rng::Rng as SeededRng;

pub fn uniform_matrix(rng: &mut SeededRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

pub fn uniform_vec(rng: &mut SeededRng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.random_range(lo..hi))
}

/// Literal 1-based `y_ij = Σ_u Σ_v f_uv x_{i−u+1, j−v+1}` over the valid region,
/// plus bias and ReLU, by direct quadruple loop.
pub fn conv_literal(x: &Array2<f64>, f: &Array2<f64>, bias: f64) -> Array2<f64> {
    let (big_m, big_n) = x.dim();
    let (m, n) = f.dim();
    let xi = |i: usize, j: usize| x[[i - 1, j - 1]];
    let fi = |u: usize, v: usize| f[[u - 1, v - 1]];
    let mut y = Array2::zeros((big_m - m + 1, big_n - n + 1));
    for i in m..=big_m {
        for j in n..=big_n {
            let mut s = 0.0;
            for u in 1..=m {
                for v in 1..=n {
                    s += fi(u, v) * xi(i - u + 1, j - v + 1);
                }
            }
            y[[i - m, j - n]] = (s + bias).max(0.0);
        }
    }
    y
}

/// Valid cross-correlation (`Σ ω[i][j] x[oi+i][oj+j]`), no bias.
pub fn xcorr_valid(x: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let (mm, nn) = x.dim();
    let (m, n) = w.dim();
    Array2::from_shape_fn((mm - m + 1, nn - n + 1), |(oi, oj)| {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..n {
                s += w[[i, j]] * x[[oi + i, oj + j]];
            }
        }
        s
    })
}

/// Transposed convolution as the correlation of the zero-padded input with
/// the 180°-rotated kernel.
pub fn tconv_padded(x: &Array2<f64>, k: &Array2<f64>, bias: f64) -> Array2<f64> {
    let (h, w) = x.dim();
    let (m, n) = k.dim();
    let mut padded = Array2::zeros((h + 2 * (m - 1), w + 2 * (n - 1)));
    for i in 0..h {
        for j in 0..w {
            padded[[i + m - 1, j + n - 1]] = x[[i, j]];
        }
    }
    let rotated = Array2::from_shape_fn((m, n), |(a, b)| k[[m - 1 - a, n - 1 - b]]);
    xcorr_valid(&padded, &rotated).mapv(|v| v + bias)
}

/// Dense convolution matrix written out from its definition.
pub fn conv_matrix_dense(w: &Array2<f64>, rows_in: usize, cols_in: usize) -> Array2<f64> {
    let (m, n) = w.dim();
    let (oh, ow) = (rows_in - m + 1, cols_in - n + 1);
    let mut c = Array2::zeros((oh * ow, rows_in * cols_in));
    for k in 0..oh * ow {
        let (oi, oj) = (k / ow, k % ow);
        for i in 0..m {
            for j in 0..n {
                c[[k, (oi + i) * cols_in + (oj + j)]] = w[[i, j]];
            }
        }
    }
    c
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar evaluation of the six LSTM equations.
#[derive(Debug, Clone, Copy)]
pub struct ScalarLstm {
    pub w: [f64; 4],
    pub u: [f64; 4],
    pub b: [f64; 4],
}

impl ScalarLstm {
    pub fn random(rng: &mut SeededRng) -> Self {
        let mut draw = || [0; 4].map(|_| rng.random_range(-1.5..1.5));
        Self {
            w: draw(),
            u: draw(),
            b: draw(),
        }
    }

    pub fn step(&self, x: f64, h: f64, c: f64) -> (f64, f64) {
        let it = logistic(self.w[0] * x + self.u[0] * h + self.b[0]);
        let ft = logistic(self.w[1] * x + self.u[1] * h + self.b[1]);
        let ot = logistic(self.w[2] * x + self.u[2] * h + self.b[2]);
        let ct_tilde = (self.w[3] * x + self.u[3] * h + self.b[3]).tanh();
        let ct = ft * c + it * ct_tilde;
        let ht = ot * ct.tanh();
        (ht, ct)
    }
}

/// Loop-based LSTM step over explicit index sums.
/// Gate order in the arrays: i, f, o, c̃.
pub fn lstm_step_loops(
    w: &[Array2<f64>; 4],
    u: &[Array2<f64>; 4],
    b: &[Array1<f64>; 4],
    x: &Array1<f64>,
    h: &Array1<f64>,
    c: &Array1<f64>,
) -> (Array1<f64>, Array1<f64>) {
    let hidden = h.len();
    let mut h_out = Array1::zeros(hidden);
    let mut c_out = Array1::zeros(hidden);
    for k in 0..hidden {
        let mut z = [0.0; 4];
        for g in 0..4 {
            let mut s = b[g][k];
            for j in 0..x.len() {
                s += w[g][[k, j]] * x[j];
            }
            for j in 0..hidden {
                s += u[g][[k, j]] * h[j];
            }
            z[g] = s;
        }
        let (i, f, o, ct) = (logistic(z[0]), logistic(z[1]), logistic(z[2]), z[3].tanh());
        c_out[k] = f * c[k] + i * ct;
        h_out[k] = o * c_out[k].tanh();
    }
    (h_out, c_out)
}

/// Straight-line forward of the composite network from oracle layers.
pub fn composite_oracle(
    kernels: &Array3<f64>,
    conv_bias: &Array1<f64>,
    w: &[Array2<f64>; 4],
    u: &[Array2<f64>; 4],
    b: &[Array1<f64>; 4],
    tkernel: &Array2<f64>,
    tbias: f64,
    seq: &Array3<f64>,
) -> Array2<f64> {
    let filters = kernels.dim().0;
    let hidden = w[0].nrows();
    let mut h = Array1::zeros(hidden);
    let mut c = Array1::zeros(hidden);
    let mut fshape = (0, 0);
    for t in 0..seq.dim().0 {
        let field = seq.index_axis(ndarray::Axis(0), t).to_owned();
        let mut x = Vec::new();
        for f in 0..filters {
            let k = kernels.index_axis(ndarray::Axis(0), f).to_owned();
            let y = conv_literal(&field, &k, conv_bias[f]);
            fshape = y.dim();
            x.extend(y.iter().copied());
        }
        let (hn, cn) = lstm_step_loops(w, u, b, &Array1::from(x), &h, &c);
        h = hn;
        c = cn;
    }
    let hmap = Array2::from_shape_vec(fshape, h.to_vec()).unwrap();
    tconv_padded(&hmap, tkernel, tbias)
}
