//! Audio quality and intelligibility scores of reconstructed speech against
//! the ground truth: SDR, log-spectral distance, mel-cepstral distance and
//! STOI, plus good/fair/poor banding.

mod align;
mod cepstral;
mod report;
mod spectral;
mod stoi;

pub use align::{align, Alignment};
pub use cepstral::{mel_cd, MelCdConfig};
pub use report::{evaluate, Band, BandThresholds, MetricBands, MetricConfig, MetricReport, Threshold};
pub use spectral::{lsd, sdr, SDR_CAP_DB};
pub use stoi::{stoi, STOI_RATE_HZ};
