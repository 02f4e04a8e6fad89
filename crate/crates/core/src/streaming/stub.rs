use std::time::Duration;

use num_complex::Complex;

use super::BatchProcessor;
use crate::error::Result;
use crate::Scalar;

/// Passes samples through unchanged after sleeping a fixed per-window time.
///
/// `per_window_s` is in simulated seconds; the sleep is divided by
/// `time_scale` so accelerated-clock runs keep the same ratios.
#[derive(Clone, Debug)]
pub struct SleepStub {
    per_window_s: f64,
    time_scale: f64,
}

impl SleepStub {
    pub fn new(per_window_s: f64, time_scale: f64) -> Self {
        Self { per_window_s, time_scale }
    }
}

impl<T: Scalar> BatchProcessor<T> for SleepStub {
    fn name(&self) -> &str {
        "sleep-stub"
    }

    fn process(&mut self, input: &[Complex<T>], batch_size: usize) -> Result<Vec<Complex<T>>> {
        std::thread::sleep(Duration::from_secs_f64(self.per_window_s * batch_size as f64 / self.time_scale));
        Ok(input.to_vec())
    }
}

/// Zero-cost passthrough.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityModel;

impl<T: Scalar> BatchProcessor<T> for IdentityModel {
    fn name(&self) -> &str {
        "identity"
    }

    fn process(&mut self, input: &[Complex<T>], _batch_size: usize) -> Result<Vec<Complex<T>>> {
        Ok(input.to_vec())
    }
}
