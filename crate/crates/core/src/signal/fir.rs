use num_complex::Complex;

use super::IqSignal;
use crate::error::{invalid, Result};
use crate::Scalar;

/// Linear-phase FIR filter with real, symmetric taps and an odd length.
#[derive(Clone, Debug, PartialEq)]
pub struct FirFilter<T = f64> {
    taps: Vec<T>,
}

impl<T: Scalar> FirFilter<T> {
    pub fn new(taps: Vec<T>) -> Result<Self> {
        if taps.len() % 2 == 0 {
            return Err(invalid!("FIR filter needs an odd tap count, got {}", taps.len()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid!("FIR taps must be finite"));
        }
        let n = taps.len();
        for k in 0..n / 2 {
            let (a, b) = (taps[k], taps[n - 1 - k]);
            let tol = T::lit(1e-12) * (a.abs() + b.abs() + T::one());
            if (a - b).abs() > tol {
                return Err(invalid!("FIR taps must be symmetric; taps[{k}] != taps[{}]", n - 1 - k));
            }
        }
        Ok(Self { taps })
    }

    /// Single unit tap centred in `len` zeros.
    pub fn impulse(len: usize) -> Result<Self> {
        if len % 2 == 0 {
            return Err(invalid!("FIR filter needs an odd tap count, got {len}"));
        }
        let mut taps = vec![T::zero(); len];
        taps[len / 2] = T::one();
        Self::new(taps)
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples, `(N - 1) / 2`.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// `|H(f)|` evaluated directly from the taps.
    pub fn magnitude_response(&self, f_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * f_hz / sample_rate_hz;
        let acc: Complex<f64> = self
            .taps
            .iter()
            .enumerate()
            .map(|(k, t)| Complex::from_polar(t.as_f64(), -w * k as f64))
            .sum();
        acc.norm()
    }
}

/// Hamming-windowed sinc lowpass normalized to unit DC gain.
pub fn design_lowpass<T: Scalar>(cutoff_hz: f64, sample_rate_hz: f64, num_taps: usize) -> Result<FirFilter<T>> {
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
        return Err(invalid!(
            "lowpass cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
            sample_rate_hz / 2.0
        ));
    }
    if num_taps % 2 == 0 || num_taps < 11 {
        return Err(invalid!("lowpass needs an odd tap count of at least 11, got {num_taps}"));
    }
    Ok(FirFilter { taps: windowed_sinc(cutoff_hz / sample_rate_hz, num_taps) })
}

/// Windowed sinc with normalized cutoff `fc` (cycles per sample), DC gain 1.
pub(crate) fn windowed_sinc<T: Scalar>(fc: f64, num_taps: usize) -> Vec<T> {
    use std::f64::consts::PI;
    let m = (num_taps - 1) as f64;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|k| {
            let t = k as f64 - m / 2.0;
            let sinc = if t == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * t).sin() / (PI * t) };
            let window = if num_taps == 1 { 1.0 } else { 0.54 - 0.46 * (2.0 * PI * k as f64 / m).cos() };
            sinc * window
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    // enforce exact symmetry after rounding
    for k in 0..num_taps / 2 {
        let avg = 0.5 * (taps[k] + taps[num_taps - 1 - k]);
        taps[k] = avg;
        taps[num_taps - 1 - k] = avg;
    }
    taps.into_iter().map(T::lit).collect()
}

/// Linear convolution with the group delay removed, truncated to the input length.
pub fn filter<T: Scalar>(x: &IqSignal<T>, h: &FirFilter<T>) -> Result<IqSignal<T>> {
    if x.is_empty() {
        return Err(invalid!("cannot filter an empty signal"));
    }
    let taps = h.taps();
    let d = h.group_delay() as isize;
    let xs = x.samples();
    let n = xs.len() as isize;
    let zero = Complex::new(T::zero(), T::zero());
    let out = (0..n)
        .map(|i| {
            // y[i] = sum_k h[k] x[i + d - k]
            let k_lo = (i + d - (n - 1)).max(0) as usize;
            let k_hi = ((i + d).min(taps.len() as isize - 1)) as usize;
            let mut acc = zero;
            for k in k_lo..=k_hi {
                acc += xs[(i + d - k as isize) as usize] * taps[k];
            }
            acc
        })
        .collect();
    Ok(IqSignal::from_trusted(out, x.sample_rate_hz()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(f: f64, fs: f64, n: usize) -> IqSignal<f64> {
        let s = (0..n)
            .map(|k| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * f * k as f64 / fs))
            .collect();
        IqSignal::new(s, fs).unwrap()
    }

    #[test]
    fn lowpass_dc_gain_and_symmetry() {
        let h = design_lowpass::<f64>(5000.0, 50_000.0, 101).unwrap();
        let sum: f64 = h.taps().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let n = h.len();
        for k in 0..n {
            assert_eq!(h.taps()[k], h.taps()[n - 1 - k]);
        }
    }

    #[test]
    fn lowpass_stopband_attenuation() {
        let h = design_lowpass::<f64>(5000.0, 50_000.0, 101).unwrap();
        // dense DTFT grid over the stopband from 10 kHz upward
        let worst = (0..=1500)
            .map(|i| 10_000.0 + i as f64 * 10.0)
            .map(|f| 20.0 * h.magnitude_response(f, 50_000.0).log10())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= -40.0, "stopband peak {worst} dB");
    }

    #[test]
    fn lowpass_rejects_bad_arguments() {
        assert!(design_lowpass::<f64>(5000.0, 50_000.0, 100).is_err());
        assert!(design_lowpass::<f64>(5000.0, 50_000.0, 9).is_err());
        assert!(design_lowpass::<f64>(25_000.0, 50_000.0, 101).is_err());
        assert!(design_lowpass::<f64>(0.0, 50_000.0, 101).is_err());
        assert!(FirFilter::new(vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn impulse_filter_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = IqSignal::new(
            (0..300).map(|_| Complex::new(rng.random::<f64>(), rng.random::<f64>())).collect(),
            1.0,
        )
        .unwrap();
        let y = filter(&x, &FirFilter::impulse(31).unwrap()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn dc_passes_through() {
        let x = IqSignal::new(vec![Complex::new(0.7, -0.2); 1000], 50_000.0).unwrap();
        let h = design_lowpass(5000.0, 50_000.0, 101).unwrap();
        let y = filter(&x, &h).unwrap();
        for s in &y.samples()[100..900] {
            assert!((s - Complex::new(0.7, -0.2)).norm() < 1e-6);
        }
    }

    #[test]
    fn stopband_tone_is_suppressed() {
        let x = tone(10_000.0, 50_000.0, 5000);
        let h = design_lowpass(5000.0, 50_000.0, 101).unwrap();
        let y = filter(&x, &h).unwrap();
        let steady = y.window(200, 4600).unwrap();
        assert!(steady.rms() <= 0.01 * x.rms(), "{}", steady.rms());
    }

    #[test]
    fn filter_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut draw = || {
            IqSignal::new(
                (0..500).map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect(),
                8000.0,
            )
            .unwrap()
        };
        let (x, y) = (draw(), draw());
        let h = design_lowpass(1000.0, 8000.0, 51).unwrap();
        let lhs = filter(&x.scaled(2.5).add(&y.scaled(-0.75)).unwrap(), &h).unwrap();
        let rhs = filter(&x, &h).unwrap().scaled(2.5).add(&filter(&y, &h).unwrap().scaled(-0.75)).unwrap();
        let err = lhs.samples().iter().zip(rhs.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }
}
