//! Classical separators: band-limited FM demodulation and windowed LMMSE.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rfsep_core::signal::{self, FrequencyBand, IqSignal};
use rfsep_core::waveforms::{fm_demodulate, AudioSignal, FmConfig};

use crate::error::{config, Error, Result};
use crate::layout::{lit, wide, Element};

/// Taps of the band-selection lowpass.
pub const BANDPASS_TAPS: usize = 129;

/// Keeps `band` only: shift its centre to DC, lowpass at half its width,
/// shift back.
pub fn bandpass<T: Element>(x: &IqSignal<T>, band: &FrequencyBand) -> Result<IqSignal<T>> {
    let fs = x.sample_rate_hz();
    band.check_within(fs)?;
    let half = band.width_hz() / 2.0;
    if half >= fs / 2.0 {
        return Ok(x.clone());
    }
    let centre = band.center_hz();
    let down = signal::frequency_shift(x, -centre)?;
    let h = signal::design_lowpass(half, fs, BANDPASS_TAPS)?;
    let filtered = signal::filter(&down, &h)?;
    Ok(signal::frequency_shift(&filtered, centre)?)
}

/// Bandpass to the SOI band, then FM demodulation. Uses nothing about the
/// interferer.
pub fn matched_filter<T: Element>(mixture: &IqSignal<T>, soi_band: &FrequencyBand, fm: &FmConfig) -> Result<AudioSignal<T>> {
    let y = bandpass(mixture, soi_band)?;
    Ok(fm_demodulate(&y, fm)?)
}

/// Sample covariance `E[x xᴴ]` over non-overlapping length-`m` windows of
/// every signal in `pool`.
pub fn sample_covariance<T: Element>(pool: &[IqSignal<T>], m: usize) -> Result<DMatrix<Complex<f64>>> {
    if m == 0 {
        return Err(config!("covariance window must be positive"));
    }
    let mut c = DMatrix::<Complex<f64>>::zeros(m, m);
    let mut count = 0usize;
    for x in pool {
        for w in x.samples().chunks_exact(m) {
            let v = DVector::from_iterator(m, w.iter().map(|s| Complex::new(wide(s.re), wide(s.im))));
            c += &v * v.adjoint();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Input(format!("no pool signal holds a full window of {m} samples")));
    }
    Ok(c / Complex::new(count as f64, 0.0))
}

/// Wiener gain `G = C_s (C_s + C_b)⁻¹` applied to non-overlapping windows.
#[derive(Clone, Debug)]
pub struct Lmmse {
    gain: DMatrix<Complex<f64>>,
}

/// Ratio of extreme eigenvalue magnitudes of a Hermitian matrix.
pub fn condition_estimate(a: &DMatrix<Complex<f64>>) -> f64 {
    let eig = a.clone().symmetric_eigen();
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let max = abs.iter().copied().fold(0.0, f64::max);
    let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

impl Lmmse {
    /// Solves `(C_s + C_b + λ·mean(diag)·I) X = C_s` by Cholesky and sets
    /// `G = Xᴴ`; `loading` is the relative diagonal load `λ`.
    pub fn new(cs: &DMatrix<Complex<f64>>, cb: &DMatrix<Complex<f64>>, loading: f64) -> Result<Self> {
        let m = cs.nrows();
        if m == 0 || !cs.is_square() || cb.shape() != cs.shape() {
            return Err(Error::Input(format!("covariances must be equal square matrices, got {:?} and {:?}", cs.shape(), cb.shape())));
        }
        if !(loading >= 0.0) {
            return Err(config!("diagonal loading must be non-negative, got {loading}"));
        }
        let mut a = cs + cb;
        let mean_diag = a.diagonal().iter().map(|v| v.re).sum::<f64>() / m as f64;
        for i in 0..m {
            a[(i, i)] += Complex::new(loading * mean_diag, 0.0);
        }
        let chol = a.clone().cholesky().ok_or_else(|| Error::Singular { condition: condition_estimate(&a) })?;
        let x = chol.solve(cs);
        let gain = x.adjoint();
        if gain.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular { condition: condition_estimate(&a) });
        }
        Ok(Self { gain })
    }

    pub fn window(&self) -> usize {
        self.gain.nrows()
    }

    pub fn gain(&self) -> &DMatrix<Complex<f64>> {
        &self.gain
    }

    /// Estimate of the SOI; a partial last window is zero padded and trimmed.
    pub fn apply<T: Element>(&self, y: &IqSignal<T>) -> Result<IqSignal<T>> {
        let m = self.window();
        let mut out = Vec::with_capacity(y.len());
        for w in y.samples().chunks(m) {
            let mut v = DVector::<Complex<f64>>::zeros(m);
            for (d, s) in v.iter_mut().zip(w) {
                *d = Complex::new(wide(s.re), wide(s.im));
            }
            let e = &self.gain * v;
            out.extend(e.iter().take(w.len()).map(|c| Complex::new(lit::<T>(c.re), lit::<T>(c.im))));
        }
        Ok(IqSignal::new(out, y.sample_rate_hz())?)
    }
}
