use crate::error::{Error, Result};
use crate::graph::{Graph, Op, Var};
use crate::Real;

pub(crate) const ROTARY_BASE: f64 = 10_000.0;

fn rotate_pairs<T: Real>(v: &mut [T], src: &[T], position: usize, base: f64, inverse: bool) {
    let d = src.len();
    for j in 0..d / 2 {
        let theta = base.powf(-2.0 * j as f64 / d as f64);
        let angle = position as f64 * theta;
        let (s, c) = if inverse { (-angle.sin(), angle.cos()) } else { angle.sin_cos() };
        let (s, c) = (T::lit(s), T::lit(c));
        let (x0, x1) = (src[2 * j], src[2 * j + 1]);
        v[2 * j] = x0 * c - x1 * s;
        v[2 * j + 1] = x0 * s + x1 * c;
    }
}

/// Rotates consecutive pairs of a head vector by `position·θ_j`, with
/// `θ_j = 10000^(−2j/d)`.
pub fn rotary_encode<T: Real>(x: &[T], position: usize) -> Result<Vec<T>> {
    if x.len() % 2 != 0 {
        return Err(Error::Invalid(format!("rotary encoding needs an even head dimension, got {}", x.len())));
    }
    let mut out = vec![T::zero(); x.len()];
    rotate_pairs(&mut out, x, position, ROTARY_BASE, false);
    Ok(out)
}

/// Applies the rotation to every `[T, d]` block of `shape`, position `offset + t`.
pub(crate) fn rotary_apply<T: Real>(shape: &[usize], data: &[T], offset: usize, base: f64, inverse: bool) -> Vec<T> {
    let r = shape.len();
    let (t, d) = (shape[r - 2], shape[r - 1]);
    let mut out = vec![T::zero(); data.len()];
    for (i, (dst, src)) in out.chunks_mut(d).zip(data.chunks(d)).enumerate() {
        rotate_pairs(dst, src, offset + i % t, base, inverse);
    }
    out
}

impl<T: Real> Graph<T> {
    /// Rotary encoding of `x [..., T, d]`; row `t` gets position `offset + t`.
    pub fn rotary(&mut self, x: Var, offset: usize) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        if sx.len() < 2 || sx[sx.len() - 1] % 2 != 0 {
            return Err(Error::Invalid(format!("rotary encoding needs [..., T, even d], got {sx:?}")));
        }
        let out = rotary_apply(&sx, self.data(x), offset, ROTARY_BASE, false);
        self.push("rotary", sx, out, Op::Rotary { x, offset, base: ROTARY_BASE }, &[x])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_at_zero_and_norm_preserving() {
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 1.3).cos()).collect();
        assert_eq!(rotary_encode(&x, 0).unwrap(), x);
        for p in [1, 7, 100, 5000] {
            assert!((norm(&rotary_encode(&x, p).unwrap()) - norm(&x)).abs() <= 1e-6);
        }
        assert!(rotary_encode(&x[..7], 3).is_err());
    }

    #[test]
    fn dot_product_depends_on_offset_only() {
        let q: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let k: Vec<f64> = (0..16).map(|i| (i as f64 * 0.91).cos()).collect();
        let dot = |p: usize, delta: usize| {
            let a = rotary_encode(&q, p).unwrap();
            let b = rotary_encode(&k, p + delta).unwrap();
            a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
        };
        for delta in [0, 1, 5, 17, 40] {
            let base = dot(0, delta);
            for p in [3, 11, 29, 64, 200] {
                assert!((dot(p, delta) - base).abs() <= 1e-5, "p {p} delta {delta}");
            }
        }
    }
}
