//! Signal generators and converters: FM voice, simplified OFDM downlink
//! interference, synthetic speech-like audio and WAV I/O.

mod audio;
mod fm;
mod ofdm;
mod speech;
pub mod wav;

pub use audio::AudioSignal;
pub use fm::{fm_demodulate, fm_modulate, FmConfig};
pub use ofdm::{ofdm_demodulate, ofdm_generate, qam_constellation, OfdmConfig, OfdmFrame};
pub use speech::{speech_like, SpeechLikeConfig};
