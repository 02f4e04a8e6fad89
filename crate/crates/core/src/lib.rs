//! Baseband DSP, waveform generation, mixture datasets, audio quality metrics
//! and real-time latency accounting for RF interference rejection.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root pick the common instantiations.

pub mod error;
pub mod metrics;
pub mod mixing;
mod scalar;
pub mod signal;
pub mod streaming;
pub mod waveforms;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use scalar::Scalar;

pub type IqSignalF32 = signal::IqSignal<f32>;
pub type IqSignalF64 = signal::IqSignal<f64>;
pub type AudioSignalF32 = waveforms::AudioSignal<f32>;
pub type AudioSignalF64 = waveforms::AudioSignal<f64>;
pub type FirFilterF64 = signal::FirFilter<f64>;
pub type MixtureExampleF32 = mixing::MixtureExample<f32>;
pub type MixtureExampleF64 = mixing::MixtureExample<f64>;


