//! Spatiotemporal wind-field forecasting.
//!
//! The crate predicts the next 6-hour or 24-hour averaged wind-speed field on a
//! regular grid from the preceding block averages, using a composite network:
//! a convolutional input layer, an LSTM recurrent layer and a transposed
//! convolution output layer. Around that network it provides:
//!
//! - [`griddata`]: the `WNDF` grid file format, block averaging, sample
//!   construction with train/validation/test partitions and linear scaling;
//! - [`synthgen`]: a seeded generator of wind-like fields with seasonality and
//!   spatiotemporal correlation;
//! - [`neuralnet`]: the layers, analytic gradients, RMSprop training and the
//!   convolution-matrix algebra;
//! - [`baselines`]: persistence, monthly mean value and BIC-selected ARIMA;
//! - [`evaluation`]: error tables, relative errors, autocorrelation, spatial
//!   correlation, bias correction, confidence regions and paired inference;
//! - [`cli`]: the pipelines behind the `windfield` binary.
//!
//! All randomness flows from explicit seeds through [`rng::seeded`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod griddata;
pub(crate) mod linalg;
pub mod neuralnet;
pub mod rng;
pub mod synthgen;

pub use error::{Error, Result};
