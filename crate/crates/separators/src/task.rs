//! Synthetic separation task: FM-modulated audio as the signal of interest,
//! frequency-shifted narrowband OFDM as the interferer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfsep_core::mixing::{build_dataset, mix_at_sinr, shift_schedule, Dataset, DatasetSpec, MixtureExample};
use rfsep_core::signal::{self, FrequencyBand, IqSignal};
use rfsep_core::waveforms::{fm_modulate, ofdm_generate, speech_like, AudioSignal, FmConfig, OfdmConfig, SpeechLikeConfig};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::layout::{lit, Element};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoiAudio {
    /// One sinusoid per source, frequency drawn from `tone_range_hz`.
    Tone,
    /// Synthetic harmonic speech-like audio.
    Speech,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyTaskConfig {
    pub audio: SoiAudio,
    pub tone_range_hz: [f64; 2],
    /// Audio amplitude before FM (full deviation at 1.0).
    pub tone_amplitude: f64,
    pub speech: SpeechLikeConfig,
    pub fm: FmConfig,
    pub ofdm: OfdmConfig,
    /// Number of independent SOI source recordings.
    pub soi_sources: usize,
    /// Length of each SOI source in seconds.
    pub soi_source_s: f64,
    /// Length of the raw interference recording in seconds.
    pub interference_s: f64,
    pub seed: u64,
}

impl Default for ToyTaskConfig {
    fn default() -> Self {
        Self {
            audio: SoiAudio::Speech,
            tone_range_hz: [300.0, 3000.0],
            tone_amplitude: 0.9,
            speech: SpeechLikeConfig::default(),
            fm: FmConfig::default(),
            ofdm: OfdmConfig {
                fft_size: 64,
                num_active_subcarriers: 48,
                cp_length: 16,
                subcarrier_spacing_hz: 240.0,
                qam_order: 4,
                num_symbols: 1,
                seed: 0,
            },
            soi_sources: 20,
            soi_source_s: 4.0,
            interference_s: 20.0,
            seed: 0,
        }
    }
}

/// Carson bandwidth of the FM signal, `±(deviation + audio_rate/2)`.
///
/// Used as the SOI band: a measured occupied band collapses to a few bins
/// on silent stretches, where the carrier is unmodulated.
pub fn carson_band(fm: &FmConfig) -> Result<FrequencyBand> {
    Ok(FrequencyBand::centered(fm.deviation_hz + fm.audio_rate_hz / 2.0)?)
}

/// Default dataset settings for the task: 2048-sample slices, a 0 dB mix,
/// interference shifted by ±1 and ±3 kHz, Carson band of the default FM.
pub fn default_dataset_spec() -> DatasetSpec {
    DatasetSpec {
        soi_band: Some(carson_band(&FmConfig::default()).expect("default FM config is valid")),
        slice_length: 2048,
        sinr_range_db: [0.0, 0.0],
        count: 2000,
        shift_step_hz: 2000.0,
        shift_span_hz: 8000.0,
        train_fraction: 0.9,
        val_fraction: 0.1,
        ..DatasetSpec::default()
    }
}

/// Independent stream of seeds for each purpose.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_AUDIO: u64 = 1;
const TAG_OFDM: u64 = 2;
const TAG_EVAL: u64 = 3;

impl ToyTaskConfig {
    pub fn validate(&self) -> Result<()> {
        self.fm.validate()?;
        let [lo, hi] = self.tone_range_hz;
        if !(lo > 0.0 && lo <= hi && hi < self.fm.audio_rate_hz / 2.0) {
            return Err(config!("tone_range_hz must satisfy 0 < low <= high < audio_rate/2, got [{lo}, {hi}]"));
        }
        if !(self.tone_amplitude > 0.0 && self.tone_amplitude <= 1.0) {
            return Err(config!("tone_amplitude must be in (0, 1]"));
        }
        if self.soi_sources == 0 || !(self.soi_source_s > 0.0) || !(self.interference_s > 0.0) {
            return Err(config!("soi_sources, soi_source_s and interference_s must be positive"));
        }
        Ok(())
    }

    /// Audio of source `index`, `duration_s` long, at the FM audio rate.
    pub fn audio<T: Element>(&self, index: u64, duration_s: f64) -> Result<AudioSignal<T>> {
        let seed = sub_seed(sub_seed(self.seed, TAG_AUDIO), index);
        let fs = self.fm.audio_rate_hz;
        match self.audio {
            SoiAudio::Speech => {
                let cfg = SpeechLikeConfig { sample_rate_hz: fs, ..self.speech.clone() };
                Ok(speech_like(duration_s, &cfg, seed)?)
            }
            SoiAudio::Tone => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = rng.random_range(self.tone_range_hz[0]..=self.tone_range_hz[1]);
                let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                let n = (duration_s * fs).round() as usize;
                let w = 2.0 * std::f64::consts::PI * f / fs;
                let samples = (0..n).map(|i| lit::<T>(self.tone_amplitude * (w * i as f64 + phase).sin())).collect();
                Ok(AudioSignal::new(samples, fs)?)
            }
        }
    }

    /// Audio sources and their FM baseband at the RF rate.
    pub fn soi_sources<T: Element>(&self) -> Result<Vec<(AudioSignal<T>, IqSignal<T>)>> {
        self.validate()?;
        (0..self.soi_sources as u64)
            .map(|i| {
                let a = self.audio::<T>(i, self.soi_source_s)?;
                let s = fm_modulate(&a, &self.fm)?;
                Ok((a, s))
            })
            .collect()
    }

    /// OFDM long enough for `duration_s` seconds at its native rate.
    pub fn interference_source<T: Element>(&self, duration_s: f64, tag: u64) -> Result<IqSignal<T>> {
        let fs = self.ofdm.sample_rate_hz();
        let symbols = ((duration_s * fs) / self.ofdm.symbol_length() as f64).ceil().max(1.0) as usize;
        let cfg = OfdmConfig { num_symbols: symbols, seed: sub_seed(sub_seed(self.seed, TAG_OFDM), tag), ..self.ofdm.clone() };
        Ok(ofdm_generate::<T>(&cfg)?.signal)
    }

    /// SOI slices and interference slices for `spec`.
    pub fn pools<T: Element>(
        &self,
        soi: &[IqSignal<T>],
        raw_interference: &IqSignal<T>,
        spec: &DatasetSpec,
    ) -> Result<(Vec<IqSignal<T>>, Vec<IqSignal<T>>)> {
        let mut soi_pool = Vec::new();
        for s in soi {
            soi_pool.extend(signal::slice(s, spec.slice_length)?);
        }
        let int_pool = spec.interference_pool(raw_interference, self.fm.rf_rate_hz)?;
        Ok((soi_pool, int_pool))
    }

    /// Sources, pools and mixtures in one go.
    pub fn dataset<T: Element>(&self, spec: &DatasetSpec) -> Result<Dataset<T>> {
        let soi: Vec<IqSignal<T>> = self.soi_sources::<T>()?.into_iter().map(|(_, s)| s).collect();
        let raw = self.interference_source::<T>(self.interference_s, 0)?;
        let (sp, ip) = self.pools(&soi, &raw, spec)?;
        Ok(build_dataset(&sp, &ip, spec)?)
    }

    /// Held-out long clips: fresh audio and a fresh OFDM draw per clip, one
    /// mixture per target SINR. Clip `i` uses audio index `1_000_000 + i`.
    pub fn eval_clips<T: Element>(&self, clips: usize, clip_s: f64, sinr_grid_db: &[f64], spec: &DatasetSpec) -> Result<Vec<EvalClip<T>>> {
        self.validate()?;
        let shifts = shift_schedule(spec.shift_step_hz, spec.shift_span_hz);
        let mut out = Vec::with_capacity(clips);
        for i in 0..clips {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(sub_seed(self.seed, TAG_EVAL), i as u64));
            let audio = self.audio::<T>(1_000_000 + i as u64, clip_s)?;
            let soi = fm_modulate(&audio, &self.fm)?;
            let ofdm_s = clip_s * 1.05 + 0.01;
            let raw = self.interference_source::<T>(ofdm_s, 1_000_000 + i as u64)?;
            let shift = shifts[rng.random_range(0..shifts.len())];
            let pool = rfsep_core::mixing::prepare_interference_pool(&raw, &[shift], soi.len(), self.fm.rf_rate_hz)?;
            let b = &pool[0];
            let band = match spec.soi_band {
                Some(b) => b,
                None => signal::occupied_band(&soi, spec.soi_band_fraction)?,
            };
            let mixtures = sinr_grid_db
                .iter()
                .map(|&sinr| Ok(mix_at_sinr(&soi, b, sinr, band)?))
                .collect::<Result<Vec<_>>>()?;
            out.push(EvalClip { audio, mixtures, shift_hz: shift });
        }
        Ok(out)
    }
}

/// One held-out clip mixed at every grid SINR.
#[derive(Clone, Debug)]
pub struct EvalClip<T: Element> {
    pub audio: AudioSignal<T>,
    pub mixtures: Vec<MixtureExample<T>>,
    pub shift_hz: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dataset_builds_with_calibrated_sinr() {
        let task = ToyTaskConfig { soi_sources: 2, soi_source_s: 0.5, interference_s: 1.0, ..Default::default() };
        let spec = DatasetSpec { count: 20, ..default_dataset_spec() };
        let ds = task.dataset::<f32>(&spec).unwrap();
        assert_eq!(ds.examples.len(), 20);
        assert!(ds.max_sinr_error_db() <= 0.1);
        assert!(ds.examples.iter().all(|e| e.len() == 2048));
    }

    #[test]
    fn tone_audio_is_deterministic() {
        let task = ToyTaskConfig { audio: SoiAudio::Tone, ..Default::default() };
        let a = task.audio::<f64>(3, 0.1).unwrap();
        assert_eq!(a, task.audio::<f64>(3, 0.1).unwrap());
        assert_ne!(a, task.audio::<f64>(4, 0.1).unwrap());
    }
}
