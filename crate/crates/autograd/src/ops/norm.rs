use super::{split_axis, Sink};
use crate::error::{shape_err, Error, Result};
use crate::graph::{Graph, Op, Var};
use crate::tensor::Tensor;
use crate::Real;

/// Causal sliding-window mask for `t` queries over `t` keys: query `i` may
/// attend to key `j` iff `j <= i` and `i - j < window`. Row-major `[t, t]`.
pub fn attention_mask(t: usize, window: usize) -> Vec<bool> {
    (0..t * t).map(|idx| {
        let (i, j) = (idx / t, idx % t);
        j <= i && i - j < window
    })
    .collect()
}

impl<T: Real> Graph<T> {
    /// Normalizes over the last axis, then scales by `gamma` and shifts by
    /// `beta` (both shaped like the last axis).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        let d = *sx.last().expect("tensors have rank >= 1");
        if self.shape(gamma) != [d] || self.shape(beta) != [d] {
            return Err(shape_err("layer_norm", &sx, self.shape(gamma)));
        }
        let (xd, gd, bd) = (self.data(x), self.data(gamma), self.data(beta));
        let mut out = Vec::with_capacity(xd.len());
        let mut rstd = Vec::with_capacity(xd.len() / d);
        for row in xd.chunks(d) {
            let mean = row.iter().copied().sum::<T>() / T::lit(d as f64);
            let var = row.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>() / T::lit(d as f64);
            let r = T::one() / (var + T::lit(eps)).sqrt();
            rstd.push(r);
            out.extend(row.iter().zip(gd.iter().zip(bd)).map(|(v, (g, b))| (*v - mean) * r * *g + *b));
        }
        self.push("layer_norm", sx, out, Op::LayerNorm { x, gamma, beta, rstd }, &[x, gamma, beta])
    }

    /// Softmax along `axis`.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        if axis >= sx.len() {
            return Err(Error::Invalid(format!("softmax axis {axis} out of range for shape {sx:?}")));
        }
        let (outer, n, inner) = split_axis(&sx, axis);
        let xd = self.data(x);
        let mut out = vec![T::zero(); xd.len()];
        for o in 0..outer {
            for j in 0..inner {
                let at = |i: usize| (o * n + i) * inner + j;
                let mx = (0..n).map(|i| xd[at(i)]).fold(T::neg_infinity(), T::max);
                let mut z = T::zero();
                for i in 0..n {
                    let e = (xd[at(i)] - mx).exp();
                    out[at(i)] = e;
                    z += e;
                }
                for i in 0..n {
                    out[at(i)] /= z;
                }
            }
        }
        self.push("softmax", sx, out, Op::Softmax { x, axis }, &[x])
    }

    /// Softmax over the last axis of `x [..., tq, tk]` where positions with
    /// `mask[i·tk + j] == false` are treated as logits of −∞ (weight exactly 0).
    pub fn masked_softmax(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        let r = sx.len();
        if r < 2 || mask.len() != sx[r - 2] * sx[r - 1] {
            return Err(shape_err("masked_softmax", &sx, &[mask.len()]));
        }
        let tk = sx[r - 1];
        let xd = self.data(x);
        let mut out = vec![T::zero(); xd.len()];
        for (ri, (row, dst)) in xd.chunks(tk).zip(out.chunks_mut(tk)).enumerate() {
            let m = &mask[(ri * tk) % mask.len()..][..tk];
            let mx = row.iter().zip(m).filter(|(_, &k)| k).map(|(v, _)| *v).fold(T::neg_infinity(), T::max);
            if mx == T::neg_infinity() {
                return Err(Error::Invalid("attention row with every key masked".into()));
            }
            let mut z = T::zero();
            for ((d, v), &keep) in dst.iter_mut().zip(row).zip(m) {
                if keep {
                    *d = (*v - mx).exp();
                    z += *d;
                }
            }
            dst.iter_mut().for_each(|d| *d /= z);
        }
        self.push("masked_softmax", sx, out, Op::MaskedSoftmax { x }, &[x])
    }
}

pub(crate) fn softmax_backward<T: Real>(y: &Tensor<T>, axis: usize, g: &[T]) -> Vec<T> {
    let (outer, n, inner) = split_axis(y.shape(), axis);
    let yd = y.data();
    let mut dx = vec![T::zero(); yd.len()];
    for o in 0..outer {
        for j in 0..inner {
            let at = |i: usize| (o * n + i) * inner + j;
            let dot = (0..n).map(|i| yd[at(i)] * g[at(i)]).sum::<T>();
            for i in 0..n {
                dx[at(i)] = yd[at(i)] * (g[at(i)] - dot);
            }
        }
    }
    dx
}

pub(crate) fn layer_norm_backward<T: Real>(
    graph: &Graph<T>,
    x: Var,
    gamma: Var,
    beta: Var,
    rstd: &[T],
    g: &[T],
    give: &mut Sink<T>,
) {
    let (xd, gd) = (graph.data(x), graph.data(gamma));
    let d = gd.len();
    let dt = T::lit(d as f64);
    let mut dx = vec![T::zero(); xd.len()];
    let mut dgamma = vec![T::zero(); d];
    let mut dbeta = vec![T::zero(); d];
    let mut xhat = vec![T::zero(); d];
    let mut dxhat = vec![T::zero(); d];
    for (r, ((row, grow), dxrow)) in xd.chunks(d).zip(g.chunks(d)).zip(dx.chunks_mut(d)).enumerate() {
        let mean = row.iter().copied().sum::<T>() / dt;
        for i in 0..d {
            xhat[i] = (row[i] - mean) * rstd[r];
            dxhat[i] = grow[i] * gd[i];
            dgamma[i] += grow[i] * xhat[i];
            dbeta[i] += grow[i];
        }
        let m1 = dxhat.iter().copied().sum::<T>() / dt;
        let m2 = dxhat.iter().zip(&xhat).map(|(a, b)| *a * *b).sum::<T>() / dt;
        for i in 0..d {
            dxrow[i] = rstd[r] * (dxhat[i] - m1 - xhat[i] * m2);
        }
    }
    give(x, dx);
    give(gamma, dgamma);
    give(beta, dbeta);
}
