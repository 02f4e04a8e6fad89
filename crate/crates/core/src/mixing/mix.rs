use crate::error::{invalid, Error, Result};
use crate::signal::{inband_power, FrequencyBand, IqSignal};
use crate::Scalar;

/// One training/evaluation record.
///
/// `mixture` is built as `soi + interference_scaled` sample by sample, so the
/// identity holds exactly in the stored precision.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureExample<T: Scalar = f64> {
    pub mixture: IqSignal<T>,
    pub soi: IqSignal<T>,
    pub interference_scaled: IqSignal<T>,
    pub target_sinr_db: f64,
    pub achieved_sinr_db: f64,
    pub kappa: f64,
    pub soi_band: FrequencyBand,
    pub seed: u64,
}

impl<T: Scalar> MixtureExample<T> {
    /// Re-measures the in-band SINR of the stored components.
    pub fn measured_sinr_db(&self) -> Result<f64> {
        sinr_db(&self.soi, &self.interference_scaled, &self.soi_band)
    }

    pub fn len(&self) -> usize {
        self.mixture.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mixture.is_empty()
    }
}

fn sinr_db<T: Scalar>(s: &IqSignal<T>, b: &IqSignal<T>, band: &FrequencyBand) -> Result<f64> {
    let ps = inband_power(s, band)?.as_f64();
    let pb = inband_power(b, band)?.as_f64();
    if pb <= 0.0 {
        return Err(Error::Numerical("interference has no in-band power".into()));
    }
    Ok(10.0 * (ps / pb).log10())
}

/// Scales `b` by `kappa` so that the in-band power ratio of `s` to `kappa·b`
/// equals the target, and returns `s + kappa·b` with its components.
pub fn mix_at_sinr<T: Scalar>(
    s: &IqSignal<T>,
    b: &IqSignal<T>,
    target_sinr_db: f64,
    soi_band: FrequencyBand,
) -> Result<MixtureExample<T>> {
    s.check_compatible(b)?;
    if !target_sinr_db.is_finite() {
        return Err(invalid!("target SINR must be finite, got {target_sinr_db}"));
    }
    let ps = inband_power(s, &soi_band)?.as_f64();
    let pb = inband_power(b, &soi_band)?.as_f64();
    if ps <= 0.0 {
        return Err(Error::Numerical("signal of interest has no power inside its band".into()));
    }
    if pb <= 0.0 {
        return Err(Error::Numerical("interference has zero in-band power; kappa is undefined".into()));
    }
    let kappa = (ps / (pb * 10f64.powf(target_sinr_db / 10.0))).sqrt();
    let interference_scaled = b.scaled(T::lit(kappa));
    let mixture = s.add(&interference_scaled)?;
    let achieved_sinr_db = sinr_db(s, &interference_scaled, &soi_band)?;
    Ok(MixtureExample {
        mixture,
        soi: s.clone(),
        interference_scaled,
        target_sinr_db,
        achieved_sinr_db,
        kappa,
        soi_band,
        seed: 0,
    })
}
