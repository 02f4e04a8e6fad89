use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AudioSignal;
use crate::error::{invalid, Result};
use crate::Scalar;

/// Parameters of the synthetic speech-like test audio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeechLikeConfig {
    pub sample_rate_hz: f64,
    /// Mean syllable duration in seconds.
    pub syllable_s: f64,
    /// Probability that a syllable slot is a pause.
    pub pause_probability: f64,
    /// Peak amplitude after normalization.
    pub peak: f64,
}

impl Default for SpeechLikeConfig {
    fn default() -> Self {
        Self { sample_rate_hz: 8000.0, syllable_s: 0.22, pause_probability: 0.15, peak: 0.9 }
    }
}

const FORMANT_RANGES: [(f64, f64); 3] = [(300.0, 900.0), (900.0, 2200.0), (2200.0, 3400.0)];
const FORMANT_GAINS: [f64; 3] = [1.0, 0.5, 0.25];
const FORMANT_WIDTH_HZ: f64 = 250.0;
const SPECTRAL_FLOOR: f64 = 0.05;

/// Amplitude-modulated harmonic multitone with a syllabic rhythm.
///
/// Each syllable is a gliding pitch (90–210 Hz) whose harmonics are shaped
/// by three gliding formant bumps, under a raised-cosine envelope.
/// Occasional pauses give the silence structure real speech has.
pub fn speech_like<T: Scalar>(duration_s: f64, cfg: &SpeechLikeConfig, seed: u64) -> Result<AudioSignal<T>> {
    if !(duration_s > 0.0) || !(cfg.syllable_s > 0.0) || !(cfg.peak > 0.0 && cfg.peak <= 1.0) {
        return Err(invalid!("speech-like audio needs positive duration and syllable length and peak in (0, 1]"));
    }
    use std::f64::consts::PI;
    let fs = cfg.sample_rate_hz;
    let total = (duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(total);
    let mut phase = 0.0f64;
    while out.len() < total {
        let len = ((cfg.syllable_s * rng.random_range(0.6..1.4)) * fs) as usize;
        let len = len.max(8).min(total - out.len());
        // the first slot is always voiced, so no clip is pure silence
        if rng.random::<f64>() < cfg.pause_probability && !out.is_empty() {
            out.extend(std::iter::repeat_n(0.0, len));
            continue;
        }
        let formants: Vec<(f64, f64)> = FORMANT_RANGES
            .iter()
            .map(|&(lo, hi)| (rng.random_range(lo..hi), rng.random_range(lo..hi)))
            .collect();
        let f0 = (rng.random_range(100.0..200.0), rng.random_range(90.0..210.0));
        for n in 0..len {
            let u = n as f64 / len as f64;
            let env = 0.5 - 0.5 * (2.0 * PI * u).cos();
            let pitch = f0.0 + (f0.1 - f0.0) * u;
            phase = (phase + 2.0 * PI * pitch / fs) % (2.0 * PI);
            let mut v = 0.0;
            let mut h = 1.0;
            while h * pitch < 0.45 * fs {
                let f = h * pitch;
                let gain = formants
                    .iter()
                    .zip(FORMANT_GAINS)
                    .map(|(&(a, b), g)| {
                        let c = a + (b - a) * u;
                        g * (-((f - c) / FORMANT_WIDTH_HZ).powi(2)).exp()
                    })
                    .sum::<f64>()
                    + SPECTRAL_FLOOR;
                v += gain * (h * phase).sin();
                h += 1.0;
            }
            out.push(env * v);
        }
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { cfg.peak / peak } else { 1.0 };
    AudioSignal::new(out.into_iter().map(|v| T::lit(v * gain)).collect(), fs)
}
