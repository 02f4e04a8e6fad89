use std::io::Write;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::IqSignal;
use crate::Scalar;

/// Simplified downlink OFDM grid: every active resource element carries a
/// random QAM symbol, so the interference is persistent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub num_active_subcarriers: usize,
    pub cp_length: usize,
    pub subcarrier_spacing_hz: f64,
    pub qam_order: usize,
    pub num_symbols: usize,
    pub seed: u64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            fft_size: 64,
            num_active_subcarriers: 48,
            cp_length: 16,
            subcarrier_spacing_hz: 15_000.0,
            qam_order: 4,
            num_symbols: 100,
            seed: 0,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            return Err(invalid!("fft_size must be a power of two >= 2, got {}", self.fft_size));
        }
        if self.num_active_subcarriers == 0 || self.num_active_subcarriers > self.fft_size - 1 {
            return Err(invalid!(
                "num_active_subcarriers must be in 1..={} (DC unused), got {}",
                self.fft_size - 1,
                self.num_active_subcarriers
            ));
        }
        if self.cp_length >= self.fft_size {
            return Err(invalid!("cp_length ({}) must be shorter than fft_size ({})", self.cp_length, self.fft_size));
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return Err(invalid!("subcarrier_spacing_hz must be positive"));
        }
        if ![4, 16, 64].contains(&self.qam_order) {
            return Err(invalid!("qam_order must be 4, 16 or 64, got {}", self.qam_order));
        }
        if self.num_symbols == 0 {
            return Err(invalid!("num_symbols must be at least 1"));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.subcarrier_spacing_hz
    }

    pub fn symbol_length(&self) -> usize {
        self.fft_size + self.cp_length
    }

    /// Nominal occupied bandwidth, `num_active · spacing`.
    pub fn occupied_bandwidth_hz(&self) -> f64 {
        self.num_active_subcarriers as f64 * self.subcarrier_spacing_hz
    }

    /// FFT bin index of each active subcarrier, negative frequencies first,
    /// skipping DC.
    pub fn active_bins(&self) -> Vec<usize> {
        let na = self.num_active_subcarriers as isize;
        let n = self.fft_size as isize;
        (0..na)
            .map(|i| {
                let offset = if i < na / 2 { i - na / 2 } else { i - na / 2 + 1 };
                offset.rem_euclid(n) as usize
            })
            .collect()
    }
}

/// Unit-average-power square QAM constellation.
pub fn qam_constellation(order: usize) -> Vec<Complex<f64>> {
    let m = (order as f64).sqrt() as usize;
    let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
    (0..order)
        .map(|idx| {
            let i = (idx % m) as f64;
            let q = (idx / m) as f64;
            Complex::new((2.0 * i - (m as f64 - 1.0)) / scale, (2.0 * q - (m as f64 - 1.0)) / scale)
        })
        .collect()
}

/// Generated waveform and the symbols it carries.
#[derive(Clone, Debug)]
pub struct OfdmFrame<T: Scalar> {
    pub signal: IqSignal<T>,
    /// `grid[symbol][subcarrier]`, subcarriers ordered as [`OfdmConfig::active_bins`].
    pub grid: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> OfdmFrame<T> {
    /// Dumps the grid as `symbol,subcarrier,re,im` rows.
    pub fn write_grid_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "symbol,subcarrier,re,im")?;
        for (s, row) in self.grid.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                writeln!(w, "{s},{k},{},{}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Builds `num_symbols` OFDM symbols with cyclic prefixes from a seeded RNG.
///
/// Each body is the inverse DFT of the grid scaled by `1/sqrt(num_active)`,
/// which gives unit mean power per sample.
pub fn ofdm_generate<T: Scalar>(cfg: &OfdmConfig) -> Result<OfdmFrame<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let constellation = qam_constellation(cfg.qam_order);
    let bins = cfg.active_bins();
    let n = cfg.fft_size;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let scale = 1.0 / (cfg.num_active_subcarriers as f64).sqrt();

    let mut samples = Vec::with_capacity(cfg.num_symbols * cfg.symbol_length());
    let mut grid = Vec::with_capacity(cfg.num_symbols);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for _ in 0..cfg.num_symbols {
        buf.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        let row: Vec<Complex<f64>> =
            bins.iter().map(|_| constellation[rng.random_range(0..cfg.qam_order)]).collect();
        for (&b, &v) in bins.iter().zip(&row) {
            buf[b] = v;
        }
        ifft.process(&mut buf);
        let body: Vec<Complex<T>> = buf.iter().map(|v| Complex::new(T::lit(v.re * scale), T::lit(v.im * scale))).collect();
        samples.extend_from_slice(&body[n - cfg.cp_length..]);
        samples.extend_from_slice(&body);
        grid.push(row.iter().map(|v| Complex::new(T::lit(v.re), T::lit(v.im))).collect());
    }
    Ok(OfdmFrame { signal: IqSignal::new(samples, cfg.sample_rate_hz())?, grid })
}

/// Strips the prefixes, transforms each body and reads the active bins back,
/// undoing the generator's scaling.
pub fn ofdm_demodulate<T: Scalar>(x: &IqSignal<T>, cfg: &OfdmConfig) -> Result<Vec<Vec<Complex<T>>>> {
    cfg.validate()?;
    let sym = cfg.symbol_length();
    if x.len() % sym != 0 {
        return Err(invalid!("signal length {} is not a multiple of the symbol length {sym}", x.len()));
    }
    let n = cfg.fft_size;
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let bins = cfg.active_bins();
    let unscale = T::lit((cfg.num_active_subcarriers as f64).sqrt() / n as f64);
    Ok(x.samples()
        .chunks_exact(sym)
        .map(|chunk| {
            let mut body = chunk[cfg.cp_length..].to_vec();
            fft.process(&mut body);
            bins.iter().map(|&b| body[b] * unscale).collect()
        })
        .collect())
}
