//! Minimal numerical core for the separators: dense row-major tensors, a
//! recording graph with reverse-mode differentiation, parameter storage,
//! checkpoints and the Adam optimizer.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`). Models train in
//! `f32`; the `f64` instantiation serves as a high-precision shadow for
//! gradient verification.

mod checkpoint;
mod error;
mod graph;
pub mod gradcheck;
mod ops;
mod optim;
mod params;
mod real;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointEntry};
pub use error::{Error, Result};
pub use graph::{Graph, Var};
pub use ops::{attention_mask, gelu_scalar, rotary_encode, Padding};
pub use optim::{clip_grad_norm, Adam, AdamConfig};
pub use params::{Init, ParamId, ParamStore};
pub use real::Real;
pub use tensor::Tensor;

pub type TensorF32 = Tensor<f32>;
pub type TensorF64 = Tensor<f64>;
pub type GraphF32 = Graph<f32>;
pub type GraphF64 = Graph<f64>;
pub type ParamStoreF32 = ParamStore<f32>;
