use num_complex::Complex;

use super::fir::windowed_sinc;
use super::IqSignal;
use crate::error::{invalid, Result};
use crate::Scalar;

/// Filter half-length per unit of `max(p, q)`.
const HALF_TAPS_PER_PHASE: usize = 10;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced `(p, q)` with `to_hz / from_hz == p / q`. Both rates must be whole Hz.
pub fn rational_ratio(from_hz: f64, to_hz: f64) -> Result<(usize, usize)> {
    let whole = |r: f64| r > 0.0 && r.fract() == 0.0 && r < 1e12;
    if !whole(from_hz) || !whole(to_hz) {
        return Err(invalid!(
            "rational resampling needs whole-Hz rates, got {from_hz} Hz -> {to_hz} Hz"
        ));
    }
    let (a, b) = (to_hz as usize, from_hz as usize);
    let g = gcd(a, b);
    Ok((a / g, b / g))
}

/// Polyphase rational resampler: up by `p`, anti-alias lowpass, down by `q`.
///
/// Output rate is `fs * p / q` and output length `ceil(len * p / q)`. The
/// interpolation filter's group delay is removed so the timelines line up.
pub fn resample<T: Scalar>(x: &IqSignal<T>, p: usize, q: usize) -> Result<IqSignal<T>> {
    if p == 0 || q == 0 {
        return Err(invalid!("resampling factors must be positive, got {p}/{q}"));
    }
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);
    let fs_out = x.sample_rate_hz() * p as f64 / q as f64;
    if p == 1 && q == 1 {
        return Ok(x.clone());
    }
    let len = x.len();
    let out_len = (len * p).div_ceil(q);
    let num_taps = 2 * HALF_TAPS_PER_PHASE * p.max(q) + 1;
    let fc = 0.5 / p.max(q) as f64;
    // scale each polyphase branch to unit DC gain so constants pass exactly
    let mut taps: Vec<f64> = windowed_sinc(fc, num_taps);
    for r in 0..p {
        let branch: f64 = taps.iter().skip(r).step_by(p).sum();
        taps.iter_mut().skip(r).step_by(p).for_each(|t| *t /= branch);
    }
    let taps: Vec<T> = taps.into_iter().map(T::lit).collect();
    let delay = (num_taps - 1) / 2;
    let xs = x.samples();
    let zero = Complex::new(T::zero(), T::zero());

    let out = (0..out_len)
        .map(|m| {
            // upsampled index j = m q + delay - k must be a multiple of p
            let base = m * q + delay;
            let mut acc = zero;
            let mut k = base % p;
            while k < num_taps && k <= base {
                let i = (base - k) / p;
                if i < len {
                    acc += xs[i] * taps[k];
                }
                k += p;
            }
            acc
        })
        .collect();
    Ok(IqSignal::from_trusted(out, fs_out))
}
