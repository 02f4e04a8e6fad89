use crate::error::{invalid, Result};
use crate::signal::spectrum::{hann, FramePower};
use crate::Scalar;

/// SDR of a perfect reconstruction.
pub const SDR_CAP_DB: f64 = 100.0;

const POWER_FLOOR: f64 = 1e-10;

/// Scale-invariant signal-to-distortion ratio in dB.
///
/// The reference is projected onto the estimate's direction,
/// `target = α·ref` with `α = <est, ref> / ‖ref‖²`, and the ratio
/// `‖target‖² / ‖est − target‖²` is reported, capped at [`SDR_CAP_DB`].
pub fn sdr<T: Scalar>(reference: &[T], estimate: &[T]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(invalid!("SDR needs aligned inputs of equal length, got {} and {}", reference.len(), estimate.len()));
    }
    let rr: f64 = reference.iter().map(|v| v.as_f64().powi(2)).sum();
    if !(rr > 0.0) {
        return Err(invalid!("SDR is undefined for an all-zero reference"));
    }
    let re: f64 = reference.iter().zip(estimate).map(|(r, e)| r.as_f64() * e.as_f64()).sum();
    let alpha = re / rr;
    let (mut target, mut resid) = (0.0, 0.0);
    for (r, e) in reference.iter().zip(estimate) {
        let t = alpha * r.as_f64();
        target += t * t;
        resid += (e.as_f64() - t).powi(2);
    }
    if resid <= 0.0 || target / resid > 10f64.powf(SDR_CAP_DB / 10.0) {
        return Ok(SDR_CAP_DB);
    }
    if target <= 0.0 {
        return Ok(-SDR_CAP_DB);
    }
    Ok((10.0 * (target / resid).log10()).clamp(-SDR_CAP_DB, SDR_CAP_DB))
}

/// Log-spectral distance in dB, averaged over Hann-windowed frames.
pub fn lsd<T: Scalar>(reference: &[T], estimate: &[T], frame: usize, hop: usize) -> Result<f64> {
    if frame < 2 || hop == 0 {
        return Err(invalid!("LSD needs frame >= 2 and hop >= 1"));
    }
    let n = reference.len().min(estimate.len());
    let to64 = |x: &[T]| -> Vec<f64> { x[..n].iter().map(|v| v.as_f64()).collect() };
    let (mut r, mut e) = (to64(reference), to64(estimate));
    if n < frame {
        r.resize(frame, 0.0);
        e.resize(frame, 0.0);
    }
    let window = hann::<f64>(frame);
    let mut spec = FramePower::<f64>::new(frame);
    let mut total = 0.0;
    let mut frames = 0usize;
    let mut start = 0;
    while start + frame <= r.len() {
        let pr = spec.power(&r[start..start + frame], &window);
        let pe = spec.power(&e[start..start + frame], &window);
        let mean_sq = pr
            .iter()
            .zip(&pe)
            .map(|(a, b)| (10.0 * (a.max(POWER_FLOOR).log10() - b.max(POWER_FLOOR).log10())).powi(2))
            .sum::<f64>()
            / pr.len() as f64;
        total += mean_sq.sqrt();
        frames += 1;
        start += hop;
    }
    Ok(total / frames as f64)
}
