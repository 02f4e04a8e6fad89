use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use crate::Scalar;

/// Two sequences trimmed to their common support after delay compensation.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment<T> {
    pub reference: Vec<T>,
    pub estimate: Vec<T>,
    /// Delay of the estimate relative to the reference: `est[n] ≈ ref[n - lag]`.
    pub lag: isize,
}

/// Normalized correlation below which the peak is not trusted.
pub const CORRELATION_FLOOR: f64 = 0.05;

/// Finds the lag in `[-max_lag, max_lag]` maximizing the cross-correlation and
/// trims both sequences to their overlap.
///
/// A weak peak falls back to lag 0 with a warning.
pub fn align<T: Scalar>(reference: &[T], estimate: &[T], max_lag: usize) -> Result<Alignment<T>> {
    if reference.is_empty() || estimate.is_empty() {
        return Err(invalid!("cannot align empty sequences"));
    }
    let corr = cross_correlation(reference, estimate, max_lag);
    let (best, peak) = corr
        .iter()
        .copied()
        .enumerate()
        // first maximum wins so the result is deterministic under ties
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut lag = best as isize - max_lag as isize;
    let er: f64 = reference.iter().map(|v| v.as_f64().powi(2)).sum();
    let ee: f64 = estimate.iter().map(|v| v.as_f64().powi(2)).sum();
    let norm = (er * ee).sqrt();
    if !(norm > 0.0) || peak / norm < CORRELATION_FLOOR {
        log::warn!("alignment peak {:.3} below floor {CORRELATION_FLOOR}; using zero lag", peak / norm.max(f64::MIN_POSITIVE));
        lag = 0;
    }
    let (r0, e0) = if lag >= 0 { (0, lag as usize) } else { ((-lag) as usize, 0) };
    if r0 >= reference.len() || e0 >= estimate.len() {
        return Err(invalid!("no overlapping support at lag {lag}"));
    }
    let n = (reference.len() - r0).min(estimate.len() - e0);
    Ok(Alignment { reference: reference[r0..r0 + n].to_vec(), estimate: estimate[e0..e0 + n].to_vec(), lag })
}

/// `c[j] = Σ_n ref[n] · est[n + lag]` with `lag = j - max_lag`, via FFT.
fn cross_correlation<T: Scalar>(reference: &[T], estimate: &[T], max_lag: usize) -> Vec<f64> {
    let n = (reference.len() + estimate.len() + max_lag).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |x: &[T]| {
        let mut v = vec![Complex::new(0.0, 0.0); n];
        for (d, s) in v.iter_mut().zip(x) {
            *d = Complex::new(s.as_f64(), 0.0);
        }
        v
    };
    let (mut a, mut b) = (pad(reference), pad(estimate));
    fwd.process(&mut a);
    fwd.process(&mut b);
    let mut c: Vec<Complex<f64>> = a.iter().zip(&b).map(|(x, y)| x.conj() * y).collect();
    inv.process(&mut c);
    (0..=2 * max_lag)
        .map(|j| {
            let lag = j as isize - max_lag as isize;
            c[lag.rem_euclid(n as isize) as usize].re / n as f64
        })
        .collect()
}
