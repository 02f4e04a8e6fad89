//! Conversions between complex sample buffers and `[B, 2, L]` real tensors
//! (channel 0 is I, channel 1 is Q).

use num_complex::Complex;
use rfsep_autograd::{Real, Tensor};
use rfsep_core::Scalar;

use crate::error::{Error, Result};

/// Element type usable both for signal processing and for the tape.
pub trait Element: Scalar + Real {}

impl<T: Scalar + Real> Element for T {}

pub(crate) fn lit<T: Element>(x: f64) -> T {
    <T as Real>::lit(x)
}

pub(crate) fn wide<T: Element>(x: T) -> f64 {
    <T as Real>::as_f64(x)
}

/// Packs equal-length complex sequences into `[B, 2, L]`.
pub fn to_tensor<T: Element>(batch: &[&[Complex<T>]]) -> Result<Tensor<T>> {
    let b = batch.len();
    let l = batch.first().map_or(0, |s| s.len());
    if b == 0 || l == 0 {
        return Err(Error::Input("cannot pack an empty batch".into()));
    }
    let mut data = Vec::with_capacity(b * 2 * l);
    for s in batch {
        if s.len() != l {
            return Err(Error::Input(format!("batch sequences differ in length ({} vs {l})", s.len())));
        }
        data.extend(s.iter().map(|c| c.re));
        data.extend(s.iter().map(|c| c.im));
    }
    Ok(Tensor::new(&[b, 2, l], data)?)
}

/// Packs `B` windows of `L` samples stored back to back.
pub fn flat_to_tensor<T: Element>(samples: &[Complex<T>], batch_size: usize) -> Result<Tensor<T>> {
    if batch_size == 0 || samples.len() % batch_size != 0 {
        return Err(Error::Input(format!("{} samples do not split into {batch_size} windows", samples.len())));
    }
    let l = samples.len() / batch_size;
    let windows: Vec<&[Complex<T>]> = samples.chunks(l).collect();
    to_tensor(&windows)
}

/// Inverse of [`to_tensor`].
pub fn from_tensor<T: Element>(t: &Tensor<T>) -> Result<Vec<Vec<Complex<T>>>> {
    let s = t.shape();
    if s.len() != 3 || s[1] != 2 {
        return Err(Error::Input(format!("expected a [B, 2, L] tensor, got {s:?}")));
    }
    let l = s[2];
    Ok(t.data()
        .chunks(2 * l)
        .map(|row| row[..l].iter().zip(&row[l..]).map(|(&re, &im)| Complex::new(re, im)).collect())
        .collect())
}

/// Inverse of [`flat_to_tensor`].
pub fn tensor_to_flat<T: Element>(t: &Tensor<T>) -> Result<Vec<Complex<T>>> {
    Ok(from_tensor(t)?.into_iter().flatten().collect())
}
