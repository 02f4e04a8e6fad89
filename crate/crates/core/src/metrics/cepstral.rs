use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::spectrum::{hann, FramePower};
use crate::Scalar;

const POWER_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelCdConfig {
    pub num_mels: usize,
    pub num_ceps: usize,
    pub frame: usize,
    pub hop: usize,
}

impl Default for MelCdConfig {
    fn default() -> Self {
        Self { num_mels: 40, num_ceps: 13, frame: 256, hop: 128 }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters spanning 0..fs/2 on the HTK mel scale, one row per band.
fn mel_filterbank(num_mels: usize, nfft: usize, fs: f64) -> Vec<Vec<f64>> {
    let bins = nfft / 2 + 1;
    let top = hz_to_mel(fs / 2.0);
    let edges: Vec<f64> = (0..num_mels + 2).map(|i| mel_to_hz(top * i as f64 / (num_mels + 1) as f64)).collect();
    (0..num_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * fs / nfft as f64;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II coefficient `k` of `x`.
fn dct2(x: &[f64], k: usize) -> f64 {
    let m = x.len() as f64;
    let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
    scale
        * x.iter()
            .enumerate()
            .map(|(i, v)| v * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / m).cos())
            .sum::<f64>()
}

fn mfcc_frames(x: &[f64], cfg: &MelCdConfig, bank: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let window = hann::<f64>(cfg.frame);
    let mut spec = FramePower::<f64>::new(cfg.frame);
    let mut out = Vec::new();
    let mut start = 0;
    while start + cfg.frame <= x.len() {
        let p = spec.power(&x[start..start + cfg.frame], &window);
        let logmel: Vec<f64> = bank
            .iter()
            .map(|row| row.iter().zip(&p).map(|(w, v)| w * v).sum::<f64>().max(POWER_FLOOR).ln())
            .collect();
        out.push((1..=cfg.num_ceps).map(|k| dct2(&logmel, k)).collect());
        start += cfg.hop;
    }
    out
}

/// Mel-cepstral distance in dB between two aligned signals sampled at `fs`.
pub fn mel_cd<T: Scalar>(reference: &[T], estimate: &[T], fs: f64, cfg: &MelCdConfig) -> Result<f64> {
    if cfg.num_mels < 2 || cfg.num_ceps == 0 || cfg.num_ceps >= cfg.num_mels || cfg.frame < 16 || cfg.hop == 0 {
        return Err(invalid!("invalid mel-cepstrum configuration {cfg:?}"));
    }
    if !(fs >= 8000.0) {
        return Err(invalid!("mel-cepstral distance needs fs >= 8 kHz, got {fs}"));
    }
    let n = reference.len().min(estimate.len());
    let prep = |x: &[T]| {
        let mut v: Vec<f64> = x[..n].iter().map(|s| s.as_f64()).collect();
        if v.len() < cfg.frame {
            v.resize(cfg.frame, 0.0);
        }
        v
    };
    let bank = mel_filterbank(cfg.num_mels, cfg.frame, fs);
    let a = mfcc_frames(&prep(reference), cfg, &bank);
    let b = mfcc_frames(&prep(estimate), cfg, &bank);
    let mean = a
        .iter()
        .zip(&b)
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        / a.len() as f64;
    Ok(10.0 * std::f64::consts::SQRT_2 / std::f64::consts::LN_10 * mean)
}
