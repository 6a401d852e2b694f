//! The composite network: batched forward pass, loss and backpropagation.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};
use rand::Rng;

use super::layers::{sigmoid, ConvLayer, GateParams, LstmLayer, TransConvLayer};
use crate::griddata::{SampleSet, ScaleParams};
use crate::{rng, Error, Result};

/// Layer sizes of a composite model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub height: usize,
    pub width: usize,
    pub kernel_rows: usize,
    pub kernel_cols: usize,
    pub filters: usize,
    pub n_lags: usize,
    pub block_hours: u32,
}

impl Architecture {
    /// 3×3 kernels and a single convolution filter.
    pub fn standard(height: usize, width: usize, n_lags: usize, block_hours: u32) -> Self {
        Self {
            height,
            width,
            kernel_rows: 3,
            kernel_cols: 3,
            filters: 1,
            n_lags,
            block_hours,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_rows == 0
            || self.kernel_cols == 0
            || self.kernel_rows > self.height
            || self.kernel_cols > self.width
        {
            return Err(Error::shape(
                "architecture",
                format!(
                    "kernel {}x{} on grid {}x{}",
                    self.kernel_rows, self.kernel_cols, self.height, self.width
                ),
            ));
        }
        if self.filters == 0 || self.n_lags == 0 || self.block_hours == 0 {
            return Err(Error::shape(
                "architecture",
                "filters, lags and block hours must be positive",
            ));
        }
        Ok(())
    }

    /// Shape of each convolution output map, which is also the shape the
    /// LSTM hidden vector is reshaped to.
    pub fn feature_shape(&self) -> (usize, usize) {
        (self.height - self.kernel_rows + 1, self.width - self.kernel_cols + 1)
    }

    pub fn hidden(&self) -> usize {
        let (a, b) = self.feature_shape();
        a * b
    }

    pub fn lstm_input(&self) -> usize {
        self.filters * self.hidden()
    }
}

/// All trainable tensors. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub conv: ConvLayer,
    pub lstm: LstmLayer,
    pub tconv: TransConvLayer,
}

/// A view of one parameter tensor.
#[derive(Debug)]
pub struct ParamTensor<'a> {
    pub name: &'static str,
    /// Whether the tensor is covered by the L2 penalty (weights and kernels,
    /// not biases).
    pub penalized: bool,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

const GATE_SUFFIX: [&str; 4] = ["i", "f", "o", "c"];
const W_NAMES: [&str; 4] = ["lstm.w_i", "lstm.w_f", "lstm.w_o", "lstm.w_c"];
const U_NAMES: [&str; 4] = ["lstm.u_i", "lstm.u_f", "lstm.u_o", "lstm.u_c"];
const B_NAMES: [&str; 4] = ["lstm.b_i", "lstm.b_f", "lstm.b_o", "lstm.b_c"];

impl Parameters {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            conv: ConvLayer::zeros(arch.filters, arch.kernel_rows, arch.kernel_cols),
            lstm: LstmLayer::zeros(arch.lstm_input(), arch.hidden()),
            tconv: TransConvLayer::zeros(arch.kernel_rows, arch.kernel_cols),
        }
    }

    /// Weights and kernels uniform on `±√(6 / (fan_in + fan_out))`, biases zero.
    ///
    /// Draw order follows [`Parameters::tensors`].
    pub fn glorot(arch: &Architecture, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        Self::glorot_from(arch, &mut rng)
    }

    pub(crate) fn glorot_from(arch: &Architecture, rng: &mut rng::Rng) -> Self {
        let mut p = Self::zeros(arch);
        let (m, n) = (arch.kernel_rows, arch.kernel_cols);
        let (input, hidden) = (arch.lstm_input(), arch.hidden());
        let mut fill = |data: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in data {
                *v = rng.random_range(-limit..limit);
            }
        };
        fill(
            p.conv.kernels.as_slice_mut().expect("standard layout"),
            m * n,
            arch.filters * m * n,
        );
        for g in p.lstm.gates_mut() {
            fill(g.w.as_slice_mut().expect("standard layout"), input, hidden);
        }
        for g in p.lstm.gates_mut() {
            fill(g.u.as_slice_mut().expect("standard layout"), hidden, hidden);
        }
        fill(p.tconv.kernel.as_slice_mut().expect("standard layout"), m * n, m * n);
        p
    }

    /// Every tensor in the fixed checkpoint order: conv kernels, conv biases,
    /// the four `W`, the four `U`, the four `b` (gates i, f, o, c), the
    /// transposed-conv kernel and bias.
    pub fn tensors(&self) -> Vec<ParamTensor<'_>> {
        let mut out = vec![
            ParamTensor {
                name: "conv.kernels",
                penalized: true,
                shape: self.conv.kernels.shape().to_vec(),
                data: self.conv.kernels.as_slice().expect("standard layout"),
            },
            ParamTensor {
                name: "conv.biases",
                penalized: false,
                shape: self.conv.biases.shape().to_vec(),
                data: self.conv.biases.as_slice().expect("standard layout"),
            },
        ];
        let gates = self.lstm.gates();
        for (k, g) in gates.iter().enumerate() {
            out.push(ParamTensor {
                name: W_NAMES[k],
                penalized: true,
                shape: g.w.shape().to_vec(),
                data: g.w.as_slice().expect("standard layout"),
            });
        }
        for (k, g) in gates.iter().enumerate() {
            out.push(ParamTensor {
                name: U_NAMES[k],
                penalized: true,
                shape: g.u.shape().to_vec(),
                data: g.u.as_slice().expect("standard layout"),
            });
        }
        for (k, g) in gates.iter().enumerate() {
            out.push(ParamTensor {
                name: B_NAMES[k],
                penalized: false,
                shape: g.b.shape().to_vec(),
                data: g.b.as_slice().expect("standard layout"),
            });
        }
        out.push(ParamTensor {
            name: "tconv.kernel",
            penalized: true,
            shape: self.tconv.kernel.shape().to_vec(),
            data: self.tconv.kernel.as_slice().expect("standard layout"),
        });
        out.push(ParamTensor {
            name: "tconv.bias",
            penalized: false,
            shape: vec![1],
            data: std::slice::from_ref(&self.tconv.bias),
        });
        out
    }

    /// Mutable slices in the same order as [`Parameters::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let [gi, gf, go, gc] = self.lstm.gates_mut();
        let mut ws = Vec::with_capacity(4);
        let mut us = Vec::with_capacity(4);
        let mut bs = Vec::with_capacity(4);
        for g in [gi, gf, go, gc] {
            let GateParams { w, u, b } = g;
            ws.push(w.as_slice_mut().expect("standard layout"));
            us.push(u.as_slice_mut().expect("standard layout"));
            bs.push(b.as_slice_mut().expect("standard layout"));
        }
        let mut out: Vec<&mut [f64]> = vec![
            self.conv.kernels.as_slice_mut().expect("standard layout"),
            self.conv.biases.as_slice_mut().expect("standard layout"),
        ];
        out.extend(ws);
        out.extend(us);
        out.extend(bs);
        out.push(self.tconv.kernel.as_slice_mut().expect("standard layout"));
        out.push(std::slice::from_mut(&mut self.tconv.bias));
        out
    }

    pub fn tensor_names() -> Vec<String> {
        let mut names = vec!["conv.kernels".to_string(), "conv.biases".to_string()];
        for prefix in ["lstm.w_", "lstm.u_", "lstm.b_"] {
            names.extend(GATE_SUFFIX.iter().map(|g| format!("{prefix}{g}")));
        }
        names.push("tconv.kernel".into());
        names.push("tconv.bias".into());
        names
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Σ w² over the penalized tensors.
    pub fn penalty_sum(&self) -> f64 {
        self.tensors()
            .iter()
            .filter(|t| t.penalized)
            .flat_map(|t| t.data.iter())
            .map(|w| w * w)
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    fn check(&self, arch: &Architecture) -> Result<()> {
        let expect = Parameters::zeros(arch);
        for (a, b) in self.tensors().iter().zip(expect.tensors().iter()) {
            if a.shape != b.shape {
                return Err(Error::shape(
                    "parameters",
                    format!("{} has shape {:?}, architecture needs {:?}", a.name, a.shape, b.shape),
                ));
            }
        }
        Ok(())
    }
}

/// A trained (or initialized) network with its scaling constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeModel {
    pub arch: Architecture,
    pub params: Parameters,
    pub scale: ScaleParams,
}

impl CompositeModel {
    pub fn new(arch: Architecture, params: Parameters, scale: ScaleParams) -> Result<Self> {
        arch.validate()?;
        params.check(&arch)?;
        Ok(Self { arch, params, scale })
    }
}

/// Intermediate values of a batched forward pass.
struct Trace {
    /// Per lag: flattened convolution pre-activations, `batch × input`.
    conv_pre: Vec<Array2<f64>>,
    /// Per lag: LSTM inputs (ReLU of `conv_pre`).
    xs: Vec<Array2<f64>>,
    /// `hs[t]` is the hidden state entering lag `t`; `hs[0]` is zero.
    hs: Vec<Array2<f64>>,
    cs: Vec<Array2<f64>>,
    /// Per lag: gate activations `[i, f, o, c̃]`.
    gates: Vec<[Array2<f64>; 4]>,
    /// `batch × H × W`.
    output: Array3<f64>,
}

fn forward_batch(arch: &Architecture, p: &Parameters, inputs: &[ArrayView3<f64>]) -> Result<Trace> {
    let batch = inputs.len();
    let (m, n) = (arch.kernel_rows, arch.kernel_cols);
    let (fh, fw) = arch.feature_shape();
    let hidden = arch.hidden();
    let in_size = arch.lstm_input();
    for x in inputs {
        if x.dim() != (arch.n_lags, arch.height, arch.width) {
            return Err(Error::shape(
                "model_forward",
                format!(
                    "input {:?}, expected ({}, {}, {})",
                    x.dim(),
                    arch.n_lags,
                    arch.height,
                    arch.width
                ),
            ));
        }
    }
    let mut trace = Trace {
        conv_pre: Vec::with_capacity(arch.n_lags),
        xs: Vec::with_capacity(arch.n_lags),
        hs: vec![Array2::zeros((batch, hidden))],
        cs: vec![Array2::zeros((batch, hidden))],
        gates: Vec::with_capacity(arch.n_lags),
        output: Array3::zeros((batch, arch.height, arch.width)),
    };
    let gate_params = p.lstm.gates();
    for t in 0..arch.n_lags {
        let mut pre = Array2::<f64>::zeros((batch, in_size));
        for (b, x) in inputs.iter().enumerate() {
            let field = x.index_axis(Axis(0), t);
            let mut row = pre.row_mut(b);
            let row = row.as_slice_mut().expect("row of standard layout");
            for f in 0..arch.filters {
                let k = p.conv.kernels.index_axis(Axis(0), f);
                let bias = p.conv.biases[f];
                for i in 0..fh {
                    for j in 0..fw {
                        let mut acc = bias;
                        for u in 0..m {
                            for v in 0..n {
                                acc += k[[u, v]] * field[[i + m - 1 - u, j + n - 1 - v]];
                            }
                        }
                        row[(f * fh + i) * fw + j] = acc;
                    }
                }
            }
        }
        let x = pre.mapv(|v| v.max(0.0));
        let h_prev = &trace.hs[t];
        let c_prev = &trace.cs[t];
        let z = |g: &GateParams| x.dot(&g.w.t()) + h_prev.dot(&g.u.t()) + &g.b;
        let i_g = z(gate_params[0]).mapv(sigmoid);
        let f_g = z(gate_params[1]).mapv(sigmoid);
        let o_g = z(gate_params[2]).mapv(sigmoid);
        let c_g = z(gate_params[3]).mapv(f64::tanh);
        let c = &f_g * c_prev + &i_g * &c_g;
        let h = &o_g * &c.mapv(f64::tanh);
        trace.conv_pre.push(pre);
        trace.xs.push(x);
        trace.gates.push([i_g, f_g, o_g, c_g]);
        trace.hs.push(h);
        trace.cs.push(c);
    }
    let h_last = trace.hs.last().expect("at least one lag");
    let kernel = &p.tconv.kernel;
    for b in 0..batch {
        let mut out = trace.output.index_axis_mut(Axis(0), b);
        out.fill(p.tconv.bias);
        let h = h_last.row(b);
        for i in 0..fh {
            for j in 0..fw {
                let v = h[i * fw + j];
                for a in 0..m {
                    for c in 0..n {
                        out[[i + a, j + c]] += v * kernel[[a, c]];
                    }
                }
            }
        }
    }
    Ok(trace)
}

/// Backpropagates `d_out = ∂L/∂output` through the trace. Penalty terms are
/// not included.
fn backward_batch(
    arch: &Architecture,
    p: &Parameters,
    inputs: &[ArrayView3<f64>],
    trace: &Trace,
    d_out: &Array3<f64>,
) -> Parameters {
    let batch = inputs.len();
    let (m, n) = (arch.kernel_rows, arch.kernel_cols);
    let (fh, fw) = arch.feature_shape();
    let hidden = arch.hidden();
    let mut g = Parameters::zeros(arch);

    // transposed convolution
    let h_last = trace.hs.last().expect("at least one lag");
    let mut dh = Array2::<f64>::zeros((batch, hidden));
    for b in 0..batch {
        let d = d_out.index_axis(Axis(0), b);
        g.tconv.bias += d.sum();
        let h = h_last.row(b);
        for i in 0..fh {
            for j in 0..fw {
                let hv = h[i * fw + j];
                let mut acc = 0.0;
                for a in 0..m {
                    for c in 0..n {
                        let dv = d[[i + a, j + c]];
                        g.tconv.kernel[[a, c]] += dv * hv;
                        acc += dv * p.tconv.kernel[[a, c]];
                    }
                }
                dh[[b, i * fw + j]] = acc;
            }
        }
    }

    // through time
    let mut dc = Array2::<f64>::zeros((batch, hidden));
    let gate_params = p.lstm.gates();
    for t in (0..arch.n_lags).rev() {
        let [i_g, f_g, o_g, c_g] = &trace.gates[t];
        let c = &trace.cs[t + 1];
        let c_prev = &trace.cs[t];
        let tanh_c = c.mapv(f64::tanh);
        let d_o = &dh * &tanh_c;
        Zip::from(&mut dc)
            .and(&dh)
            .and(o_g)
            .and(&tanh_c)
            .for_each(|dc, &dh, &o, &tc| *dc += dh * o * (1.0 - tc * tc));
        let dz_i = Zip::from(&dc)
            .and(c_g)
            .and(i_g)
            .map_collect(|&dc, &cg, &i| dc * cg * i * (1.0 - i));
        let dz_f = Zip::from(&dc)
            .and(c_prev)
            .and(f_g)
            .map_collect(|&dc, &cp, &f| dc * cp * f * (1.0 - f));
        let dz_o = Zip::from(&d_o).and(o_g).map_collect(|&d, &o| d * o * (1.0 - o));
        let dz_c = Zip::from(&dc)
            .and(i_g)
            .and(c_g)
            .map_collect(|&dc, &i, &cg| dc * i * (1.0 - cg * cg));
        let dzs = [dz_i, dz_f, dz_o, dz_c];

        let x = &trace.xs[t];
        let h_prev = &trace.hs[t];
        let mut dx = Array2::<f64>::zeros(x.dim());
        let mut dh_prev = Array2::<f64>::zeros((batch, hidden));
        for (k, gate) in g.lstm.gates_mut().into_iter().enumerate() {
            let dz = &dzs[k];
            gate.w += &dz.t().dot(x);
            gate.u += &dz.t().dot(h_prev);
            gate.b += &dz.sum_axis(Axis(0));
            dx += &dz.dot(&gate_params[k].w);
            dh_prev += &dz.dot(&gate_params[k].u);
        }
        dc *= f_g;
        dh = dh_prev;

        // convolution at lag t
        let pre = &trace.conv_pre[t];
        for (b, input) in inputs.iter().enumerate() {
            let field = input.index_axis(Axis(0), t);
            for f in 0..arch.filters {
                let mut db = 0.0;
                let mut dk = g.conv.kernels.index_axis_mut(Axis(0), f);
                for i in 0..fh {
                    for j in 0..fw {
                        let idx = (f * fh + i) * fw + j;
                        if pre[[b, idx]] <= 0.0 {
                            continue;
                        }
                        let d = dx[[b, idx]];
                        db += d;
                        for u in 0..m {
                            for v in 0..n {
                                dk[[u, v]] += d * field[[i + m - 1 - u, j + n - 1 - v]];
                            }
                        }
                    }
                }
                g.conv.biases[f] += db;
            }
        }
    }
    g
}

/// Scaled `H × W` prediction from `n_lags` scaled fields.
///
/// Each lag field is convolved; the feature maps are flattened filter-major,
/// then row-major, into the LSTM input; the final hidden vector is reshaped
/// to the feature-map shape and expanded by the transposed convolution.
pub fn model_forward(model: &CompositeModel, sequence: ArrayView3<f64>) -> Result<Array2<f64>> {
    let trace = forward_batch(&model.arch, &model.params, &[sequence])?;
    Ok(trace.output.index_axis(Axis(0), 0).to_owned())
}

/// Predictions for several samples at once, `batch × H × W`.
pub fn forward_many(model: &CompositeModel, inputs: &[ArrayView3<f64>]) -> Result<Array3<f64>> {
    Ok(forward_batch(&model.arch, &model.params, inputs)?.output)
}

type BatchViews<'a> = (Vec<ArrayView3<'a, f64>>, Vec<ArrayView2<'a, f64>>);

fn batch_views<'a>(samples: &'a SampleSet, batch: &[usize]) -> Result<BatchViews<'a>> {
    if batch.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    if let Some(&bad) = batch.iter().find(|&&i| i >= samples.len()) {
        return Err(Error::Input(format!("sample index {bad} out of range")));
    }
    Ok((
        batch.iter().map(|&i| samples.input(i)).collect(),
        batch.iter().map(|&i| samples.label(i)).collect(),
    ))
}

/// Mean over samples of the squared error summed across the field.
fn data_term(output: &Array3<f64>, labels: &[ArrayView2<f64>]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(b, y)| {
            Zip::from(y)
                .and(&output.slice(s![b, .., ..]))
                .fold(0.0, |acc, &y, &yh| acc + (y - yh) * (y - yh))
        })
        .sum();
    total / labels.len() as f64
}

pub(crate) fn loss_with(
    arch: &Architecture,
    params: &Parameters,
    samples: &SampleSet,
    batch: &[usize],
    lambda: f64,
) -> Result<f64> {
    let (inputs, labels) = batch_views(samples, batch)?;
    let trace = forward_batch(arch, params, &inputs)?;
    Ok(data_term(&trace.output, &labels) + lambda * params.penalty_sum())
}

pub(crate) fn gradients_with(
    arch: &Architecture,
    params: &Parameters,
    samples: &SampleSet,
    batch: &[usize],
    lambda: f64,
) -> Result<(f64, Parameters)> {
    let (inputs, labels) = batch_views(samples, batch)?;
    let trace = forward_batch(arch, params, &inputs)?;
    let loss = data_term(&trace.output, &labels) + lambda * params.penalty_sum();
    let scale = -2.0 / labels.len() as f64;
    let mut d_out = trace.output.clone();
    for (b, y) in labels.iter().enumerate() {
        Zip::from(d_out.index_axis_mut(Axis(0), b))
            .and(y)
            .for_each(|d, &y| *d = scale * (y - *d));
    }
    let mut grads = backward_batch(arch, params, &inputs, &trace, &d_out);
    let penalized: Vec<bool> = params.tensors().iter().map(|t| t.penalized).collect();
    let values: Vec<Vec<f64>> = params.tensors().iter().map(|t| t.data.to_vec()).collect();
    for ((g, w), pen) in grads.tensors_mut().into_iter().zip(values).zip(penalized) {
        if pen {
            for (g, w) in g.iter_mut().zip(w) {
                *g += 2.0 * lambda * w;
            }
        }
    }
    Ok((loss, grads))
}

/// Batch loss: mean over samples of `‖Y − Ŷ‖²` (summed over the field's
/// cells), plus `lambda · Σ w²` over weights and kernels. Inputs and labels
/// must already be scaled.
pub fn loss(model: &CompositeModel, samples: &SampleSet, batch: &[usize], lambda: f64) -> Result<f64> {
    loss_with(&model.arch, &model.params, samples, batch, lambda)
}

/// Analytic gradient of [`loss`] with respect to every parameter, by
/// backpropagation through the transposed convolution, the unrolled LSTM and
/// the convolution. Returns the loss alongside.
pub fn gradients(
    model: &CompositeModel,
    samples: &SampleSet,
    batch: &[usize],
    lambda: f64,
) -> Result<(f64, Parameters)> {
    gradients_with(&model.arch, &model.params, samples, batch, lambda)
}

/// Hidden vector reshaped to the feature-map shape (for inspection).
pub fn reshape_hidden(arch: &Architecture, h: &Array1<f64>) -> Array2<f64> {
    let (fh, fw) = arch.feature_shape();
    Array2::from_shape_vec((fh, fw), h.to_vec()).expect("hidden size matches feature shape")
}
