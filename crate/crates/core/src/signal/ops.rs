use num_complex::Complex;

use super::spectrum::{bin_frequency, fft};
use super::{FrequencyBand, IqSignal};
use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// Mixes the signal by `exp(i 2π Δf n / fs)`.
pub fn frequency_shift<T: Scalar>(x: &IqSignal<T>, delta_hz: f64) -> Result<IqSignal<T>> {
    let fs = x.sample_rate_hz();
    if !delta_hz.is_finite() || delta_hz.abs() > fs / 2.0 {
        return Err(invalid!(
            "frequency shift of {delta_hz} Hz exceeds the Nyquist limit of ±{} Hz",
            fs / 2.0
        ));
    }
    if delta_hz == 0.0 {
        return Ok(x.clone());
    }
    let step = 2.0 * std::f64::consts::PI * delta_hz / fs;
    let out = x
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            // wrap the phase in f64 so long signals keep full precision
            let phase = (step * n as f64).rem_euclid(2.0 * std::f64::consts::PI);
            s * Complex::new(T::lit(phase.cos()), T::lit(phase.sin()))
        })
        .collect();
    Ok(IqSignal::from_trusted(out, fs))
}

/// Divides by the full-signal RMS so the result has unit mean power.
pub fn unit_normalize<T: Scalar>(x: &IqSignal<T>) -> Result<IqSignal<T>> {
    let rms = x.rms();
    if rms <= T::zero() || !rms.is_finite() {
        return Err(invalid!("cannot unit-normalize a signal with zero energy"));
    }
    Ok(x.scaled(T::one() / rms))
}

/// Power inside `band`, measured by DFT bin masking.
///
/// Scaled so that the full band returns `mean(|x[n]|^2)` and disjoint bands
/// add up to the total.
pub fn inband_power<T: Scalar>(x: &IqSignal<T>, band: &FrequencyBand) -> Result<T> {
    let fs = x.sample_rate_hz();
    band.check_within(fs)?;
    let n = x.len();
    if n == 0 {
        return Err(invalid!("in-band power of an empty signal"));
    }
    let spec = fft(x.samples());
    let mut acc = T::zero();
    let mut bins = 0usize;
    for (k, v) in spec.iter().enumerate() {
        if band.contains(bin_frequency(k, n, fs)) {
            acc += v.norm_sqr();
            bins += 1;
        }
    }
    if bins == 0 {
        return Err(invalid!(
            "band [{}, {}) Hz selects no DFT bins at resolution {} Hz",
            band.low_hz,
            band.high_hz,
            fs / n as f64
        ));
    }
    let n = T::lit(n as f64);
    Ok(acc / (n * n))
}

/// Smallest band centred on DC that holds `fraction` of the signal power.
pub fn occupied_band<T: Scalar>(x: &IqSignal<T>, fraction: f64) -> Result<FrequencyBand> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid!("power fraction must be in (0, 1], got {fraction}"));
    }
    let n = x.len();
    let fs = x.sample_rate_hz();
    if n == 0 {
        return Err(invalid!("occupied band of an empty signal"));
    }
    let spec = fft(x.samples());
    let total: f64 = spec.iter().map(|v| v.norm_sqr().as_f64()).sum();
    if total <= 0.0 {
        return Err(Error::Numerical("occupied band of a zero-energy signal".into()));
    }
    // accumulate bins in order of |f|, pairing +k with -k
    let mut acc = spec[0].norm_sqr().as_f64();
    let df = fs / n as f64;
    let mut k = 0usize;
    while acc < fraction * total && k < n / 2 {
        k += 1;
        acc += spec[k].norm_sqr().as_f64();
        if n - k != k {
            acc += spec[n - k].norm_sqr().as_f64();
        }
    }
    let half = ((k as f64 + 0.5) * df).min(fs / 2.0);
    FrequencyBand::new(-half, half)
}

/// Consecutive non-overlapping windows of `length`; the remainder is dropped.
pub fn slice<T: Scalar>(x: &IqSignal<T>, length: usize) -> Result<Vec<IqSignal<T>>> {
    if length == 0 {
        return Err(invalid!("slice length must be at least 1"));
    }
    Ok(x
        .samples()
        .chunks_exact(length)
        .map(|c| IqSignal::from_trusted(c.to_vec(), x.sample_rate_hz()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::spectrum::peak_frequency;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(f: f64, fs: f64, n: usize) -> IqSignal<f64> {
        let s = (0..n)
            .map(|k| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * f * k as f64 / fs))
            .collect();
        IqSignal::new(s, fs).unwrap()
    }

    fn noise(seed: u64, n: usize, fs: f64) -> IqSignal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..n)
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        IqSignal::new(s, fs).unwrap()
    }

    #[test]
    fn zero_shift_is_identity() {
        let x = noise(1, 256, 1e3);
        assert_eq!(frequency_shift(&x, 0.0).unwrap(), x);
    }

    #[test]
    fn shift_moves_fft_peak() {
        let x = tone(1000.0, 50_000.0, 5000);
        assert_eq!(peak_frequency(&x), 1000.0);
        let y = frequency_shift(&x, 3000.0).unwrap();
        assert_eq!(peak_frequency(&y), 4000.0);
    }

    #[test]
    fn shift_round_trip_and_magnitude() {
        let x = noise(2, 4096, 50_000.0);
        let y = frequency_shift(&x, 1234.5).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let z = frequency_shift(&y, -1234.5).unwrap();
        let err = x.samples().iter().zip(z.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn shift_beyond_nyquist_rejected() {
        let x = noise(3, 16, 1000.0);
        let err = frequency_shift(&x, 600.0).unwrap_err();
        assert!(err.to_string().contains("Nyquist"));
        assert!(frequency_shift(&x, 500.0).is_ok());
    }

    #[test]
    fn normalize_contracts() {
        let x = noise(4, 1000, 1.0);
        let y = unit_normalize(&x).unwrap();
        assert!((y.rms() - 1.0).abs() < 1e-9);
        let z = unit_normalize(&y).unwrap();
        let d = y.samples().iter().zip(z.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12);
        let c = unit_normalize(&x.scaled(7.5)).unwrap();
        let d = y.samples().iter().zip(c.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-12);

        let k = IqSignal::new(vec![Complex::new(3.0f64, 0.0); 17], 1.0).unwrap();
        for s in unit_normalize(&k).unwrap().samples() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        assert!(unit_normalize(&IqSignal::<f64>::zeros(8, 1.0).unwrap()).is_err());
    }

    #[test]
    fn inband_full_band_is_parseval() {
        let x = noise(5, 1000, 10_000.0);
        let p = inband_power(&x, &FrequencyBand::full(10_000.0)).unwrap();
        assert!((p - x.mean_power()).abs() < 1e-9);
    }

    #[test]
    fn inband_excludes_out_of_band_tone() {
        // 10 kHz is an integer bin for n = 5000 at 50 kHz
        let x = tone(10_000.0, 50_000.0, 5000);
        let p = inband_power(&x, &FrequencyBand::new(-5000.0, 5000.0).unwrap()).unwrap();
        assert!(p <= 1e-6 * x.mean_power(), "{p}");
    }

    #[test]
    fn inband_white_noise_half_band() {
        for seed in 0..10 {
            let x = unit_normalize(&noise(100 + seed, 4096, 1000.0)).unwrap();
            let p = inband_power(&x, &FrequencyBand::new(-250.0, 250.0).unwrap()).unwrap();
            assert!((p - 0.5).abs() <= 0.05, "seed {seed}: {p}");
        }
    }

    #[test]
    fn inband_additive_over_partition() {
        let x = noise(6, 999, 3000.0);
        let edges = [-1500.0, -700.0, -10.0, 0.0, 333.0, 1500.0];
        let total: f64 = edges
            .windows(2)
            .map(|w| inband_power(&x, &FrequencyBand::new(w[0], w[1]).unwrap()).unwrap())
            .sum();
        assert!((total - x.mean_power()).abs() < 1e-9);
    }

    #[test]
    fn inband_errors() {
        let x = noise(7, 100, 1000.0);
        assert!(inband_power(&x, &FrequencyBand::new(1.0, 2.0).unwrap()).is_err());
        assert!(inband_power(&x, &FrequencyBand::new(-600.0, 0.0).unwrap()).is_err());
        assert!(FrequencyBand::new(2.0, 1.0).is_err());
    }

    #[test]
    fn slicing() {
        let x = noise(8, 25_000, 1.0);
        let s = slice(&x, 10_240).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(x.len() - 2 * 10_240, 4520);
        let cat: Vec<_> = s.iter().flat_map(|w| w.samples().to_vec()).collect();
        assert_eq!(&cat[..], &x.samples()[..cat.len()]);
        assert_eq!(slice(&x.window(0, 10_240).unwrap(), 10_240).unwrap().len(), 1);
        assert!(slice(&x, 0).is_err());
    }

    #[test]
    fn occupied_band_of_tone_is_narrow() {
        let x = tone(1000.0, 50_000.0, 5000);
        let b = occupied_band(&x, 0.99).unwrap();
        assert!(b.contains(1000.0) && b.high_hz < 1100.0);
    }
}
