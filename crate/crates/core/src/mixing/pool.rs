use crate::error::{invalid, Result};
use crate::signal::{self, IqSignal};
use crate::Scalar;

/// Frequency offsets used to cycle interference through the band.
///
/// `floor(span / step)` positions (at least one) spaced by `step` and centred
/// on DC. A zero step or span gives the single position 0.
pub fn shift_schedule(step_hz: f64, span_hz: f64) -> Vec<f64> {
    if !(step_hz > 0.0) || !(span_hz > 0.0) {
        return vec![0.0];
    }
    let n = ((span_hz / step_hz).floor() as usize).max(1);
    (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * step_hz).collect()
}

/// Shift → lowpass → resample → slice → unit-normalize, for every offset in
/// the schedule. The pool is the concatenation in schedule order.
pub fn prepare_interference_pool<T: Scalar>(
    raw: &IqSignal<T>,
    shifts_hz: &[f64],
    slice_length: usize,
    target_rate_hz: f64,
) -> Result<Vec<IqSignal<T>>> {
    if slice_length == 0 {
        return Err(invalid!("slice length must be at least 1"));
    }
    let fs = raw.sample_rate_hz();
    let (p, q) = signal::rational_ratio(fs, target_rate_hz)?;
    let resampled_len = (raw.len() * p).div_ceil(q);
    if resampled_len < slice_length {
        return Err(invalid!(
            "interference of {} samples at {fs} Hz gives {resampled_len} samples at {target_rate_hz} Hz, \
             fewer than one slice of {slice_length}",
            raw.len()
        ));
    }
    let lowpass = if target_rate_hz < fs {
        let taps = ((8.0 * fs / target_rate_hz).ceil() as usize).max(11) | 1;
        Some(signal::design_lowpass(target_rate_hz / 2.0, fs, taps)?)
    } else {
        None
    };
    let mut pool = Vec::new();
    for &shift in shifts_hz {
        let shifted = signal::frequency_shift(raw, shift)?;
        let filtered = match &lowpass {
            Some(h) => signal::filter(&shifted, h)?,
            None => shifted,
        };
        let resampled = signal::resample(&filtered, p, q)?;
        for s in signal::slice(&resampled, slice_length)? {
            pool.push(signal::unit_normalize(&s)?);
        }
    }
    if pool.is_empty() {
        return Err(invalid!("interference pool is empty after processing"));
    }
    Ok(pool)
}

/// Slices the SOI stream into unit-RMS windows of `slice_length`, in order.
pub fn prepare_soi_pool<T: Scalar>(raw: &IqSignal<T>, slice_length: usize) -> Result<Vec<IqSignal<T>>> {
    if raw.len() < slice_length || slice_length == 0 {
        return Err(invalid!(
            "signal of interest has {} samples, shorter than one slice of {slice_length}",
            raw.len()
        ));
    }
    signal::slice(raw, slice_length)?.iter().map(signal::unit_normalize).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::{ofdm_generate, OfdmConfig};
    use num_complex::Complex;

    #[test]
    fn schedule_positions() {
        assert_eq!(shift_schedule(0.0, 100.0), vec![0.0]);
        assert_eq!(shift_schedule(10.0, 40.0), vec![-15.0, -5.0, 5.0, 15.0]);
        assert_eq!(shift_schedule(10.0, 30.0), vec![-10.0, 0.0, 10.0]);
    }

    #[test]
    fn pool_size_and_normalization() {
        let cfg = OfdmConfig { fft_size: 64, subcarrier_spacing_hz: 1562.5, num_symbols: 40, ..OfdmConfig::default() };
        // 100 kHz raw, 40 * 80 = 3200 samples -> 1600 at 50 kHz -> 3 slices of 500
        let raw = ofdm_generate::<f64>(&cfg).unwrap().signal;
        let shifts = shift_schedule(10_000.0, 40_000.0);
        let pool = prepare_interference_pool(&raw, &shifts, 500, 50_000.0).unwrap();
        assert_eq!(pool.len(), 12);
        for s in &pool {
            assert_eq!(s.sample_rate_hz(), 50_000.0);
            assert!((s.rms() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_shift_matches_manual_chain() {
        let cfg = OfdmConfig { subcarrier_spacing_hz: 1562.5, num_symbols: 20, ..OfdmConfig::default() };
        let raw = ofdm_generate::<f64>(&cfg).unwrap().signal;
        let pool = prepare_interference_pool(&raw, &[0.0], 256, 50_000.0).unwrap();
        let h = signal::design_lowpass(25_000.0, 100_000.0, 17).unwrap();
        let manual = signal::resample(&signal::filter(&raw, &h).unwrap(), 1, 2).unwrap();
        let slices = signal::slice(&manual, 256).unwrap();
        assert_eq!(pool.len(), slices.len());
        for (a, b) in pool.iter().zip(&slices) {
            assert_eq!(a, &signal::unit_normalize(b).unwrap());
        }
    }

    #[test]
    fn too_short_interference_rejected() {
        let raw = IqSignal::new(vec![Complex::new(1.0, 0.0); 100], 100_000.0).unwrap();
        assert!(prepare_interference_pool(&raw, &[0.0], 64, 50_000.0).is_err());
    }

    #[test]
    fn soi_pool_order_and_count() {
        let raw = IqSignal::new((0..30).map(|k| Complex::new(k as f64 + 1.0, 0.0)).collect(), 10.0).unwrap();
        let pool = prepare_soi_pool(&raw, 10).unwrap();
        assert_eq!(pool.len(), 3);
        for (i, s) in pool.iter().enumerate() {
            assert!((s.rms() - 1.0).abs() < 1e-12);
            // ratios inside a slice are preserved, so the source order is recoverable
            let ratio = s.samples()[9].re / s.samples()[0].re;
            assert!((ratio - (10.0 * i as f64 + 10.0) / (10.0 * i as f64 + 1.0)).abs() < 1e-12);
        }
        assert!(prepare_soi_pool(&raw, 31).is_err());
    }
}
