//! The composite convolution → LSTM → transposed-convolution network.

mod checkpoint;
mod convmatrix;
mod layers;
mod model;
mod optim;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, WNDM_MAGIC, WNDM_VERSION,
};
pub use convmatrix::{build_conv_matrix, ridge_deconvolve, ConvEntry, ConvMatrix};
pub use layers::{conv2d, lstm_step, lstm_unroll, tconv2d, ConvLayer, GateParams, LstmLayer, TransConvLayer};
pub use model::{
    forward_many, gradients, loss, model_forward, reshape_hidden, Architecture, CompositeModel, ParamTensor, Parameters,
};
pub use optim::{lookahead, rmsprop_step, rmsprop_update, OptimizerState, TrainConfig, RMS_EPSILON};
pub use train::{predict, predict_samples, train, train_with_progress, EpochRecord, History};
