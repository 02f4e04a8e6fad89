use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Scalar;

/// A model that maps a batch of `B` windows of `L` complex samples, laid out
/// back to back, to the same number of output samples.
pub trait BatchProcessor<T: Scalar>: Send {
    fn name(&self) -> &str;

    /// Rejects window lengths the model cannot handle.
    fn check_length(&self, _signal_length: usize) -> Result<()> {
        Ok(())
    }

    fn process(&mut self, input: &[Complex<T>], batch_size: usize) -> Result<Vec<Complex<T>>>;
}

impl<T: Scalar, P: BatchProcessor<T> + ?Sized> BatchProcessor<T> for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn check_length(&self, signal_length: usize) -> Result<()> {
        (**self).check_length(signal_length)
    }

    fn process(&mut self, input: &[Complex<T>], batch_size: usize) -> Result<Vec<Complex<T>>> {
        (**self).process(input, batch_size)
    }
}

/// Order statistics of per-window forward time `τ(B, L)` in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
    pub trials: usize,
}

impl TauStats {
    /// Statistics of raw samples; `samples` must be nonempty.
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            // linear interpolation between closest ranks
            let pos = p * (s.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
        };
        Self {
            mean: s.iter().sum::<f64>() / s.len() as f64,
            p50: q(0.5),
            p95: q(0.95),
            min: s[0],
            max: s[s.len() - 1],
            trials: s.len(),
        }
    }
}

/// Times `trials` forward passes of a random `B × L` batch after `warmup`
/// discarded passes. Reports per-window time (batch time divided by `B`).
pub fn measure_tau<T: Scalar, P: BatchProcessor<T> + ?Sized>(
    model: &mut P,
    batch_size: usize,
    signal_length: usize,
    trials: usize,
    warmup: usize,
) -> Result<TauStats> {
    if trials < 10 || warmup < 3 {
        return Err(invalid!("tau measurement needs trials >= 10 and warmup >= 3, got {trials} and {warmup}"));
    }
    if batch_size == 0 || signal_length == 0 {
        return Err(invalid!("batch size and signal length must be positive"));
    }
    model.check_length(signal_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a0);
    let input: Vec<Complex<T>> = (0..batch_size * signal_length)
        .map(|_| Complex::new(T::lit(rng.random::<f64>() - 0.5), T::lit(rng.random::<f64>() - 0.5)))
        .collect();
    for _ in 0..warmup {
        model.process(&input, batch_size)?;
    }
    let mut times = Vec::with_capacity(trials);
    for _ in 0..trials {
        let t0 = Instant::now();
        let out = model.process(&input, batch_size)?;
        times.push(t0.elapsed().as_secs_f64() / batch_size as f64);
        std::hint::black_box(out);
    }
    Ok(TauStats::from_samples(&times))
}
