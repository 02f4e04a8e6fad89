use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::AudioSignal;
use crate::error::{invalid, Result};
use crate::signal::{self, IqSignal};
use crate::Scalar;

/// Analog FM parameters. Defaults describe narrowband voice FM: 5 kHz peak
/// deviation, 8 kHz audio, 50 kHz complex baseband.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmConfig {
    pub deviation_hz: f64,
    pub audio_rate_hz: f64,
    pub rf_rate_hz: f64,
    /// Taps of the post-discriminator audio lowpass.
    pub audio_filter_taps: usize,
}

impl Default for FmConfig {
    fn default() -> Self {
        Self { deviation_hz: 5000.0, audio_rate_hz: 8000.0, rf_rate_hz: 50_000.0, audio_filter_taps: 101 }
    }
}

impl FmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.deviation_hz > 0.0) {
            return Err(invalid!("deviation_hz must be positive, got {}", self.deviation_hz));
        }
        if !(self.audio_rate_hz > 0.0 && self.rf_rate_hz >= self.audio_rate_hz) {
            return Err(invalid!(
                "rf_rate_hz ({}) must be at least audio_rate_hz ({}) and both positive",
                self.rf_rate_hz,
                self.audio_rate_hz
            ));
        }
        if self.deviation_hz >= self.rf_rate_hz / 2.0 {
            return Err(invalid!(
                "deviation_hz ({}) must stay below rf_rate_hz/2 ({})",
                self.deviation_hz,
                self.rf_rate_hz / 2.0
            ));
        }
        Ok(())
    }
}

/// Phase-accumulating FM modulator with a unit envelope.
///
/// The audio is resampled to the RF rate first; then
/// `phi[n] = phi[n-1] + 2π·deviation·a[n]/fs` and `y[n] = exp(i·phi[n])`.
pub fn fm_modulate<T: Scalar>(a: &AudioSignal<T>, cfg: &FmConfig) -> Result<IqSignal<T>> {
    cfg.validate()?;
    let audio = a.resampled(cfg.rf_rate_hz)?;
    let k = 2.0 * std::f64::consts::PI * cfg.deviation_hz / cfg.rf_rate_hz;
    let mut phase = 0.0f64;
    let out = audio
        .samples()
        .iter()
        .map(|&s| {
            phase = (phase + k * s.as_f64()).rem_euclid(2.0 * std::f64::consts::PI);
            Complex::new(T::lit(phase.cos()), T::lit(phase.sin()))
        })
        .collect();
    IqSignal::new(out, cfg.rf_rate_hz)
}

/// Quadrature discriminator followed by an audio lowpass and resampling to
/// the audio rate.
///
/// A step touching a zero-magnitude sample yields 0 rather than NaN.
pub fn fm_demodulate<T: Scalar>(x: &IqSignal<T>, cfg: &FmConfig) -> Result<AudioSignal<T>> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(invalid!("cannot demodulate an empty signal"));
    }
    let fs = x.sample_rate_hz();
    let gain = fs / (2.0 * std::f64::consts::PI * cfg.deviation_hz);
    let s = x.samples();
    let mut disc: Vec<T> = Vec::with_capacity(s.len());
    disc.push(T::zero());
    for w in s.windows(2) {
        let prod = w[1] * w[0].conj();
        let v = if prod.norm_sqr() > T::zero() { prod.im.atan2(prod.re).as_f64() * gain } else { 0.0 };
        disc.push(T::lit(v));
    }
    if disc.len() > 1 {
        disc[0] = disc[1];
    }
    let disc = IqSignal::from_trusted(disc.into_iter().map(|v| Complex::new(v, T::zero())).collect(), fs);
    let cutoff = cfg.audio_rate_hz / 2.0;
    let lowpassed = if cutoff < fs / 2.0 {
        signal::filter(&disc, &signal::design_lowpass(cutoff, fs, cfg.audio_filter_taps)?)?
    } else {
        disc
    };
    let audio = AudioSignal::new(lowpassed.samples().iter().map(|c| c.re).collect(), fs)?;
    audio.resampled(cfg.audio_rate_hz)
}
