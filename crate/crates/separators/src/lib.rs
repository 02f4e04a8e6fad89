//! Separators for FM-voice-under-OFDM mixtures: a dilated-convolution
//! WaveNet, an autoregressive transformer decoder with streaming KV cache,
//! the matched-filter and LMMSE baselines, and the training loop.
//!
//! Models are generic over the element type; training uses `f32`.

pub mod baselines;
pub mod decoder;
mod error;
pub mod evaluation;
pub mod layout;
pub mod model;
pub mod task;
pub mod train;
pub mod wavenet;

pub use baselines::{bandpass, matched_filter, sample_covariance, Lmmse};
pub use decoder::{Decoder, DecoderConfig, StreamState};
pub use error::{Error, Result};
pub use layout::Element;
pub use model::{Model, ModelConfig, ModelProcessor};
pub use task::{SoiAudio, ToyTaskConfig};
pub use train::{train, Feedback, TrainConfig, TrainReport};
pub use wavenet::{WaveNet, WaveNetConfig};

pub type WaveNetF32 = WaveNet<f32>;
pub type DecoderF32 = Decoder<f32>;
pub type DecoderF64 = Decoder<f64>;
pub type ModelF32 = Model<f32>;
pub type StreamStateF32 = StreamState<f32>;
