use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use crate::waveforms::AudioSignal;
use crate::Scalar;

/// Internal analysis rate.
pub const STOI_RATE_HZ: f64 = 10_000.0;

const FRAME: usize = 256;
const NFFT: usize = 512;
const NUM_BANDS: usize = 15;
const MIN_FREQ_HZ: f64 = 150.0;
/// Frames per short-time segment (384 ms at the analysis rate).
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;

/// Hann window without its zero end points, length `n`.
fn inner_hann(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n + 1) as f64).cos()).collect()
}

fn frame_starts(len: usize, hop: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(FRAME)).step_by(hop)
}

/// Drops frames more than `DYN_RANGE_DB` below the loudest reference frame
/// and overlap-adds the survivors.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hop = FRAME / 2;
    let w = inner_hann(FRAME);
    let windowed = |s: &[f64], at: usize| -> Vec<f64> { s[at..at + FRAME].iter().zip(&w).map(|(a, b)| a * b).collect() };
    let starts: Vec<usize> = frame_starts(x.len(), hop).collect();
    let energies: Vec<f64> = starts
        .iter()
        .map(|&i| 20.0 * (windowed(x, i).iter().map(|v| v * v).sum::<f64>().sqrt() + f64::EPSILON).log10())
        .collect();
    let loudest = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> =
        starts.iter().zip(&energies).filter(|(_, &e)| loudest - DYN_RANGE_DB - e < 0.0).map(|(&i, _)| i).collect();
    let ola = |s: &[f64]| {
        if kept.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; (kept.len() - 1) * hop + FRAME];
        for (j, &i) in kept.iter().enumerate() {
            for (o, v) in out[j * hop..j * hop + FRAME].iter_mut().zip(windowed(s, i)) {
                *o += v;
            }
        }
        out
    };
    (ola(x), ola(y))
}

/// Magnitude-squared STFT, one row per frame.
fn stft_power(x: &[f64]) -> Vec<Vec<f64>> {
    let w = inner_hann(FRAME);
    let plan = FftPlanner::<f64>::new().plan_fft_forward(NFFT);
    frame_starts(x.len(), FRAME / 2)
        .map(|i| {
            let mut buf = vec![Complex::new(0.0, 0.0); NFFT];
            for (b, (v, wv)) in buf.iter_mut().zip(x[i..i + FRAME].iter().zip(&w)) {
                *b = Complex::new(v * wv, 0.0);
            }
            plan.process(&mut buf);
            buf[..NFFT / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect()
}

/// One-third-octave band edges as FFT bin ranges.
fn third_octave_bins() -> Vec<std::ops::Range<usize>> {
    let nearest = |f: f64| {
        (0..=NFFT / 2)
            .min_by(|&a, &b| {
                let fa = a as f64 * STOI_RATE_HZ / NFFT as f64;
                let fb = b as f64 * STOI_RATE_HZ / NFFT as f64;
                (fa - f).abs().total_cmp(&(fb - f).abs())
            })
            .unwrap_or(0)
    };
    (0..NUM_BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ_HZ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ_HZ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            nearest(lo)..nearest(hi)
        })
        .collect()
}

fn band_envelopes(spec: &[Vec<f64>], bands: &[std::ops::Range<usize>]) -> Vec<Vec<f64>> {
    bands.iter().map(|r| spec.iter().map(|frame| frame[r.clone()].iter().sum::<f64>().sqrt()).collect()).collect()
}

fn centered_unit(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt() + f64::EPSILON;
    v.iter_mut().for_each(|x| *x /= norm);
}

/// Short-time objective intelligibility of `estimate` against `reference`,
/// both sampled at `fs`.
pub fn stoi<T: Scalar>(reference: &[T], estimate: &[T], fs: f64) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(invalid!("STOI needs aligned inputs of equal length, got {} and {}", reference.len(), estimate.len()));
    }
    if (reference.len() as f64) < 0.5 * fs {
        return Err(invalid!("STOI needs at least 0.5 s of audio, got {} samples at {fs} Hz", reference.len()));
    }
    let at_rate = |s: &[T]| -> Result<Vec<f64>> {
        let a = AudioSignal::new(s.iter().map(|v| v.as_f64()).collect(), fs)?;
        Ok(a.resampled(STOI_RATE_HZ)?.into_samples())
    };
    let (x, y) = (at_rate(reference)?, at_rate(estimate)?);
    if x.iter().all(|v| *v == 0.0) {
        return Err(invalid!("STOI is undefined for a silent reference"));
    }
    let (x, y) = remove_silent_frames(&x, &y);
    let (xs, ys) = (stft_power(&x), stft_power(&y));
    if xs.len() < SEGMENT {
        return Err(invalid!("only {} non-silent frames remain; STOI needs {SEGMENT}", xs.len()));
    }
    let bands = third_octave_bins();
    let (xt, yt) = (band_envelopes(&xs, &bands), band_envelopes(&ys, &bands));
    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let num_segments = xs.len() - SEGMENT + 1;
    let mut total = 0.0;
    for m in SEGMENT..=xs.len() {
        for (xb, yb) in xt.iter().zip(&yt) {
            let mut xseg = xb[m - SEGMENT..m].to_vec();
            let yseg = &yb[m - SEGMENT..m];
            let xn = xseg.iter().map(|v| v * v).sum::<f64>().sqrt();
            let yn = yseg.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gain = xn / (yn + f64::EPSILON);
            let mut yprime: Vec<f64> = yseg.iter().zip(&xseg).map(|(yv, xv)| (yv * gain).min(xv * clip)).collect();
            centered_unit(&mut yprime);
            centered_unit(&mut xseg);
            total += yprime.iter().zip(&xseg).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(total / (num_segments * NUM_BANDS) as f64)
}
