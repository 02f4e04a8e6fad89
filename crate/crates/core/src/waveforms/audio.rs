use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::signal::{self, IqSignal};
use crate::Scalar;

/// Real-valued audio, nominally within `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioSignal<T = f64> {
    samples: Vec<T>,
    sample_rate_hz: f64,
}

impl<T: Scalar> AudioSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(invalid!("sample rate must be positive and finite, got {sample_rate_hz}"));
        }
        if let Some(n) = samples.iter().position(|s| !s.is_finite()) {
            return Err(invalid!("audio sample {n} is not finite"));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
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

    /// Number of samples whose magnitude exceeds full scale.
    pub fn clipped_count(&self) -> usize {
        self.samples.iter().filter(|s| s.abs() > T::one()).count()
    }

    pub fn is_clipped(&self) -> bool {
        self.clipped_count() > 0
    }

    pub fn peak(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(invalid!("audio range [{start}, {}) exceeds length {}", start + len, self.len()));
        }
        Ok(Self { samples: self.samples[start..start + len].to_vec(), sample_rate_hz: self.sample_rate_hz })
    }

    /// Rational resampling to `rate_hz` (both rates whole Hz).
    pub fn resampled(&self, rate_hz: f64) -> Result<Self> {
        if rate_hz == self.sample_rate_hz {
            return Ok(self.clone());
        }
        let (p, q) = signal::rational_ratio(self.sample_rate_hz, rate_hz)?;
        let y = signal::resample(&self.to_iq(), p, q)?;
        Ok(Self { samples: y.samples().iter().map(|c| c.re).collect(), sample_rate_hz: y.sample_rate_hz() })
    }

    /// Embeds the audio as the in-phase component of a complex signal.
    pub fn to_iq(&self) -> IqSignal<T> {
        IqSignal::from_trusted(
            self.samples.iter().map(|&s| Complex::new(s, T::zero())).collect(),
            self.sample_rate_hz,
        )
    }

    pub fn cast<U: Scalar>(&self) -> AudioSignal<U> {
        AudioSignal { samples: self.samples.iter().map(|s| U::lit(s.as_f64())).collect(), sample_rate_hz: self.sample_rate_hz }
    }
}
