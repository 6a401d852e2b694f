//! The three layers of the composite network, one sample at a time.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Convolutional input layer: `F` kernels of `m × n`, one bias per kernel, ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[F][m][n]`.
    pub kernels: Array3<f64>,
    pub biases: Array1<f64>,
}

impl ConvLayer {
    pub fn zeros(filters: usize, m: usize, n: usize) -> Self {
        Self {
            kernels: Array3::zeros((filters, m, n)),
            biases: Array1::zeros(filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.kernels.dim().0
    }

    pub fn kernel_shape(&self) -> (usize, usize) {
        let (_, m, n) = self.kernels.dim();
        (m, n)
    }
}

/// Weights of one LSTM gate (or of the candidate cell state).
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    /// Input-to-gate, `hidden × input`.
    pub w: Array2<f64>,
    /// Recurrent, `hidden × hidden`.
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

impl GateParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((hidden, input)),
            u: Array2::zeros((hidden, hidden)),
            b: Array1::zeros(hidden),
        }
    }

    /// `W x + U h + b`.
    pub(crate) fn affine(&self, x: ArrayView1<f64>, h: ArrayView1<f64>) -> Array1<f64> {
        self.w.dot(&x) + self.u.dot(&h) + &self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub candidate: GateParams,
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input_gate: GateParams::zeros(input, hidden),
            forget_gate: GateParams::zeros(input, hidden),
            output_gate: GateParams::zeros(input, hidden),
            candidate: GateParams::zeros(input, hidden),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_gate.w.ncols()
    }

    pub fn hidden_size(&self) -> usize {
        self.input_gate.w.nrows()
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [&self.input_gate, &self.forget_gate, &self.output_gate, &self.candidate]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.output_gate,
            &mut self.candidate,
        ]
    }

    fn check(&self) -> Result<()> {
        let (h, i) = (self.hidden_size(), self.input_size());
        for g in self.gates() {
            if g.w.dim() != (h, i) || g.u.dim() != (h, h) || g.b.len() != h {
                return Err(Error::shape("lstm", "gate matrices disagree on sizes"));
            }
        }
        Ok(())
    }
}

/// Transposed-convolution output layer: one `m × n` kernel, scalar bias, linear.
#[derive(Debug, Clone, PartialEq)]
pub struct TransConvLayer {
    pub kernel: Array2<f64>,
    pub bias: f64,
}

impl TransConvLayer {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            kernel: Array2::zeros((m, n)),
            bias: 0.0,
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Convolution `y_ij = Σ_u Σ_v f_uv · x_{i−u+1, j−v+1}` over the valid region,
/// plus bias, through ReLU.
///
/// This is a true convolution: output `(i, j)` (0-based) reads
/// `x[i + m − 1 − u][j + n − 1 − v]` against `f[u][v]`, so a kernel whose only
/// nonzero entry is `f[0][0]` returns the bottom-right crop of the input.
pub fn conv2d(input: ArrayView2<f64>, layer: &ConvLayer) -> Result<Array3<f64>> {
    let pre = conv2d_linear(input, layer)?;
    Ok(pre.mapv(|v| v.max(0.0)))
}

/// [`conv2d`] before the activation.
pub(crate) fn conv2d_linear(input: ArrayView2<f64>, layer: &ConvLayer) -> Result<Array3<f64>> {
    let (rows, cols) = input.dim();
    let (m, n) = layer.kernel_shape();
    if m == 0 || n == 0 || m > rows || n > cols {
        return Err(Error::shape(
            "conv2d",
            format!("kernel {m}x{n} does not fit input {rows}x{cols}"),
        ));
    }
    let (oh, ow) = (rows - m + 1, cols - n + 1);
    let filters = layer.filters();
    let mut out = Array3::<f64>::zeros((filters, oh, ow));
    for f in 0..filters {
        let k = layer.kernels.slice(s![f, .., ..]);
        let bias = layer.biases[f];
        for i in 0..oh {
            for j in 0..ow {
                let mut acc = bias;
                for u in 0..m {
                    for v in 0..n {
                        acc += k[[u, v]] * input[[i + m - 1 - u, j + n - 1 - v]];
                    }
                }
                out[[f, i, j]] = acc;
            }
        }
    }
    Ok(out)
}

/// One LSTM update; returns `(h_t, c_t)`.
pub fn lstm_step(
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    layer: &LstmLayer,
) -> Result<(Array1<f64>, Array1<f64>)> {
    layer.check()?;
    if x.len() != layer.input_size() || h_prev.len() != layer.hidden_size() || c_prev.len() != layer.hidden_size() {
        return Err(Error::shape(
            "lstm_step",
            format!(
                "x {} / h {} / c {} against input {} hidden {}",
                x.len(),
                h_prev.len(),
                c_prev.len(),
                layer.input_size(),
                layer.hidden_size()
            ),
        ));
    }
    let i = layer.input_gate.affine(x, h_prev).mapv(sigmoid);
    let f = layer.forget_gate.affine(x, h_prev).mapv(sigmoid);
    let o = layer.output_gate.affine(x, h_prev).mapv(sigmoid);
    let g = layer.candidate.affine(x, h_prev).mapv(f64::tanh);
    let c = &f * &c_prev + &i * &g;
    let h = &o * &c.mapv(f64::tanh);
    Ok((h, c))
}

/// Runs the recurrence from zero state over `sequence` (one row per step) and
/// returns the final hidden vector.
pub fn lstm_unroll(sequence: ArrayView2<f64>, layer: &LstmLayer) -> Result<Array1<f64>> {
    if sequence.nrows() == 0 {
        return Err(Error::Input("empty LSTM input sequence".into()));
    }
    let mut h = Array1::zeros(layer.hidden_size());
    let mut c = Array1::zeros(layer.hidden_size());
    for x in sequence.rows() {
        let (h_next, c_next) = lstm_step(x, h.view(), c.view(), layer)?;
        h = h_next;
        c = c_next;
    }
    Ok(h)
}

/// Transposed convolution: grows `h × w` to `(h+m−1) × (w+n−1)`.
///
/// Each input cell scatters `x[i][j] · K` onto the output block at `(i, j)`,
/// which equals `Cᵀ·flatten(x)` for the convolution matrix `C` of `K` over the
/// output shape, and equals correlating the input zero-padded by `(m−1, n−1)`
/// with the 180°-rotated kernel. A linear activation follows.
pub fn tconv2d(input: ArrayView2<f64>, layer: &TransConvLayer) -> Result<Array2<f64>> {
    let (h, w) = input.dim();
    let (m, n) = layer.kernel.dim();
    if h == 0 || w == 0 || m == 0 || n == 0 {
        return Err(Error::shape("tconv2d", format!("input {h}x{w}, kernel {m}x{n}")));
    }
    let mut out = Array2::from_elem((h + m - 1, w + n - 1), layer.bias);
    for i in 0..h {
        for j in 0..w {
            let x = input[[i, j]];
            for a in 0..m {
                for b in 0..n {
                    out[[i + a, j + b]] += x * layer.kernel[[a, b]];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};

    #[test]
    fn all_ones_convolution() {
        let layer = ConvLayer {
            kernels: Array3::ones((1, 3, 3)),
            biases: Array1::zeros(1),
        };
        let out = conv2d(Array2::ones((4, 4)).view(), &layer).unwrap();
        assert_eq!(out, Array3::from_elem((1, 2, 2), 9.0));
    }

    #[test]
    fn delta_kernel_picks_bottom_right_crop() {
        let x = Array::from_shape_vec((4, 4), (1..=16).map(f64::from).collect()).unwrap();
        let mut layer = ConvLayer::zeros(1, 3, 3);
        layer.kernels[[0, 0, 0]] = 1.0;
        let out = conv2d(x.view(), &layer).unwrap();
        assert_eq!(out.slice(s![0, .., ..]), array![[11.0, 12.0], [15.0, 16.0]]);
    }

    #[test]
    fn relu_clips_and_kernel_too_large() {
        let mut layer = ConvLayer::zeros(1, 1, 1);
        layer.kernels[[0, 0, 0]] = -1.0;
        let out = conv2d(Array2::ones((2, 2)).view(), &layer).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        let big = ConvLayer::zeros(1, 3, 3);
        assert!(matches!(
            conv2d(Array2::ones((2, 5)).view(), &big),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn zero_lstm_is_half_open() {
        let layer = LstmLayer::zeros(1, 1);
        let (h, c) = lstm_step(array![0.3].view(), array![0.0].view(), array![0.0].view(), &layer).unwrap();
        assert_eq!((h[0], c[0]), (0.0, 0.0));
        let (h, c) = lstm_step(array![0.0].view(), array![0.0].view(), array![1.0].view(), &layer).unwrap();
        assert_eq!(c[0], 0.5);
        assert!((h[0] - 0.231_058_58).abs() < 1e-8);
        assert!((h[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn lstm_shape_errors() {
        let layer = LstmLayer::zeros(2, 3);
        assert!(lstm_step(
            array![1.0].view(),
            Array1::zeros(3).view(),
            Array1::zeros(3).view(),
            &layer
        )
        .is_err());
        assert!(matches!(
            lstm_unroll(Array2::zeros((0, 2)).view(), &layer),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn zero_lstm_unrolls_to_zero() {
        let layer = LstmLayer::zeros(2, 3);
        let seq = array![[1.0, -2.0], [0.5, 4.0], [3.0, 3.0]];
        assert_eq!(lstm_unroll(seq.view(), &layer).unwrap(), Array1::<f64>::zeros(3));
    }

    #[test]
    fn single_pixel_expansion() {
        let layer = TransConvLayer {
            kernel: Array2::ones((3, 3)),
            bias: 0.0,
        };
        let out = tconv2d(array![[2.5]].view(), &layer).unwrap();
        assert_eq!(out, Array2::from_elem((3, 3), 2.5));
        let layer = TransConvLayer {
            kernel: array![[1.0, 2.0], [3.0, 4.0]],
            bias: 0.0,
        };
        assert_eq!(
            tconv2d(array![[2.0]].view(), &layer).unwrap(),
            array![[2.0, 4.0], [6.0, 8.0]]
        );
    }

    #[test]
    fn zero_input_gives_bias() {
        let layer = TransConvLayer {
            kernel: Array2::from_elem((3, 3), 0.7),
            bias: -0.25,
        };
        let out = tconv2d(Array2::zeros((2, 5)).view(), &layer).unwrap();
        assert_eq!(out.dim(), (4, 7));
        assert!(out.iter().all(|&v| v == -0.25));
    }
}
