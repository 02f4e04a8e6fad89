//! FFT helpers shared by the DSP and metric code.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::IqSignal;
use crate::Scalar;

/// Forward DFT without normalization.
pub fn fft<T: Scalar>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = x.to_vec();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Inverse DFT scaled by `1/N`, so `ifft(fft(x)) == x`.
pub fn ifft<T: Scalar>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = x.to_vec();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
        let scale = T::one() / T::lit(buf.len() as f64);
        buf.iter_mut().for_each(|v| *v = *v * scale);
    }
    buf
}

/// Signed frequency of DFT bin `k` of an `n`-point transform, in `[-fs/2, fs/2)`.
pub fn bin_frequency(k: usize, n: usize, sample_rate_hz: f64) -> f64 {
    let k = if 2 * k >= n { k as f64 - n as f64 } else { k as f64 };
    k * sample_rate_hz / n as f64
}

/// Frequency of the strongest DFT bin.
pub fn peak_frequency<T: Scalar>(x: &IqSignal<T>) -> f64 {
    let spec = fft(x.samples());
    let k = spec
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().partial_cmp(&b.1.norm_sqr()).unwrap())
        .map(|(k, _)| k)
        .unwrap_or(0);
    bin_frequency(k, x.len(), x.sample_rate_hz())
}

/// Periodic Hann window.
pub fn hann<T: Scalar>(len: usize) -> Vec<T> {
    (0..len)
        .map(|n| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos();
            T::lit(w)
        })
        .collect()
}

/// Power spectra of real frames with a reusable plan.
pub struct FramePower<T: Scalar> {
    plan: Arc<dyn Fft<T>>,
    nfft: usize,
    buf: Vec<Complex<T>>,
}

impl<T: Scalar> FramePower<T> {
    pub fn new(nfft: usize) -> Self {
        Self {
            plan: FftPlanner::new().plan_fft_forward(nfft),
            nfft,
            buf: vec![Complex::default(); nfft],
        }
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn num_bins(&self) -> usize {
        self.nfft / 2 + 1
    }

    /// `|X[k]|^2` for `k = 0..=nfft/2` of `frame * window`, zero padded to `nfft`.
    pub fn power(&mut self, frame: &[T], window: &[T]) -> Vec<T> {
        debug_assert!(frame.len() <= self.nfft && frame.len() == window.len());
        self.buf.iter_mut().for_each(|v| *v = Complex::default());
        for (dst, (&x, &w)) in self.buf.iter_mut().zip(frame.iter().zip(window)) {
            *dst = Complex::new(x * w, T::zero());
        }
        self.plan.process(&mut self.buf);
        self.buf[..self.num_bins()].iter().map(|c| c.norm_sqr()).collect()
    }
}
