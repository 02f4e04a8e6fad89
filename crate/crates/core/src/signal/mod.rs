//! Complex-baseband primitives.
//!
//! Every routine here is a pure function of its inputs. Signals carry their
//! sample rate so that frequency arguments can be expressed in Hz.

mod fir;
mod ops;
mod resample;
pub mod rfiq;
pub mod spectrum;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Scalar;

pub use fir::{design_lowpass, filter, FirFilter};
pub use ops::{frequency_shift, inband_power, occupied_band, slice, unit_normalize};
pub use resample::{rational_ratio, resample};

/// Complex baseband sample stream.
#[derive(Clone, Debug, PartialEq)]
pub struct IqSignal<T = f64> {
    samples: Vec<Complex<T>>,
    sample_rate_hz: f64,
}

impl<T: Scalar> IqSignal<T> {
    /// Wraps samples, rejecting a non-positive rate or non-finite samples.
    pub fn new(samples: Vec<Complex<T>>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(invalid!("sample rate must be positive and finite, got {sample_rate_hz}"));
        }
        if let Some(n) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(invalid!("sample {n} is not finite"));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    /// Builds a signal from interleaved or split I/Q components.
    pub fn from_parts(i: &[T], q: &[T], sample_rate_hz: f64) -> Result<Self> {
        if i.len() != q.len() {
            return Err(invalid!("I has {} samples but Q has {}", i.len(), q.len()));
        }
        Self::new(
            i.iter().zip(q).map(|(&re, &im)| Complex::new(re, im)).collect(),
            sample_rate_hz,
        )
    }

    /// Used internally where the inputs are known to satisfy the invariants.
    pub(crate) fn from_trusted(samples: Vec<Complex<T>>, sample_rate_hz: f64) -> Self {
        debug_assert!(sample_rate_hz > 0.0);
        Self { samples, sample_rate_hz }
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![Complex::new(T::zero(), T::zero()); len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean of `|x[n]|^2`.
    pub fn mean_power(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<T>() / T::lit(self.samples.len() as f64)
    }

    pub fn rms(&self) -> T {
        self.mean_power().sqrt()
    }

    /// Multiplies every sample by a real gain.
    pub fn scaled(&self, gain: T) -> Self {
        Self::from_trusted(self.samples.iter().map(|&s| s * gain).collect(), self.sample_rate_hz)
    }

    /// Element-wise sum with another signal of equal length and rate.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_trusted(
            self.samples.iter().zip(&other.samples).map(|(&a, &b)| a + b).collect(),
            self.sample_rate_hz,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::from_trusted(
            self.samples.iter().zip(&other.samples).map(|(&a, &b)| a - b).collect(),
            self.sample_rate_hz,
        ))
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(invalid!("length mismatch: {} vs {}", self.len(), other.len()));
        }
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(invalid!(
                "sample rate mismatch: {} Hz vs {} Hz",
                self.sample_rate_hz,
                other.sample_rate_hz
            ));
        }
        Ok(())
    }

    /// Splits into separate I and Q vectors.
    pub fn to_parts(&self) -> (Vec<T>, Vec<T>) {
        self.samples.iter().map(|s| (s.re, s.im)).unzip()
    }

    /// Converts the sample type, e.g. from `f64` to `f32`.
    pub fn cast<U: Scalar>(&self) -> IqSignal<U> {
        IqSignal::from_trusted(
            self.samples
                .iter()
                .map(|s| Complex::new(U::lit(s.re.as_f64()), U::lit(s.im.as_f64())))
                .collect(),
            self.sample_rate_hz,
        )
    }

    /// Copy of samples `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.len())
            .ok_or_else(|| invalid!("window [{start}, {start}+{len}) exceeds length {}", self.len()))?;
        Ok(Self::from_trusted(self.samples[start..end].to_vec(), self.sample_rate_hz))
    }
}

/// Frequency interval relative to the baseband center, `[low_hz, high_hz)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FrequencyBand {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz < high_hz) || !low_hz.is_finite() || !high_hz.is_finite() {
            return Err(invalid!("band requires low < high, got [{low_hz}, {high_hz})"));
        }
        Ok(Self { low_hz, high_hz })
    }

    /// Band symmetric about DC: `[-half_width, +half_width)`.
    pub fn centered(half_width_hz: f64) -> Result<Self> {
        Self::new(-half_width_hz, half_width_hz)
    }

    /// The whole Nyquist range of a signal sampled at `fs`.
    pub fn full(sample_rate_hz: f64) -> Self {
        Self { low_hz: -sample_rate_hz / 2.0, high_hz: sample_rate_hz / 2.0 }
    }

    pub fn width_hz(&self) -> f64 {
        self.high_hz - self.low_hz
    }

    pub fn center_hz(&self) -> f64 {
        0.5 * (self.low_hz + self.high_hz)
    }

    pub fn contains(&self, f_hz: f64) -> bool {
        f_hz >= self.low_hz && f_hz < self.high_hz
    }

    /// Rejects a band that does not fit within `[-fs/2, fs/2]`.
    pub fn check_within(&self, sample_rate_hz: f64) -> Result<()> {
        let nyq = sample_rate_hz / 2.0;
        if self.low_hz < -nyq || self.high_hz > nyq {
            return Err(invalid!(
                "band [{}, {}) Hz exceeds Nyquist range of ±{nyq} Hz",
                self.low_hz,
                self.high_hz
            ));
        }
        Ok(())
    }
}
