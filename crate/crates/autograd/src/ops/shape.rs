use super::{split_axis, Sink};
use crate::error::{shape_err, Error, Result};
use crate::graph::{Graph, Op, Var};
use crate::tensor::numel;
use crate::Real;

/// Visits `(out_index, in_index)` pairs of a permutation of `shape`.
fn for_each_permuted(shape: &[usize], perm: &[usize], mut f: impl FnMut(usize, usize)) {
    let r = shape.len();
    let mut in_strides = vec![1usize; r];
    for i in (0..r.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut idx = vec![0usize; r];
    let mut src = 0usize;
    for dst in 0..numel(shape) {
        f(dst, src);
        for ax in (0..r).rev() {
            idx[ax] += 1;
            src += strides[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            src -= strides[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}

impl<T: Real> Graph<T> {
    /// `len` entries of `axis` starting at `start`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        if axis >= sx.len() || len == 0 || start + len > sx[axis] {
            return Err(Error::Invalid(format!("slice {start}..{} of axis {axis} is outside shape {sx:?}", start + len)));
        }
        let (outer, n, inner) = split_axis(&sx, axis);
        let xd = self.data(x);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            out.extend_from_slice(&xd[(o * n + start) * inner..(o * n + start + len) * inner]);
        }
        let mut shape = sx;
        shape[axis] = len;
        self.push("slice", shape, out, Op::Slice { x, axis, start }, &[x])
    }

    /// Joins tensors that agree on every axis except `axis`.
    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        let first = self.shape(*xs.first().ok_or_else(|| Error::Invalid("concat of nothing".into()))?).to_vec();
        if axis >= first.len() {
            return Err(Error::Invalid(format!("concat axis {axis} out of range for shape {first:?}")));
        }
        let mut total = 0;
        for &v in xs {
            let s = self.shape(v);
            if s.len() != first.len() || s.iter().zip(&first).enumerate().any(|(i, (a, b))| i != axis && a != b) {
                return Err(shape_err("concat", &first, s));
            }
            total += s[axis];
        }
        let (outer, _, inner) = split_axis(&first, axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &v in xs {
                let n = self.shape(v)[axis];
                out.extend_from_slice(&self.data(v)[o * n * inner..(o + 1) * n * inner]);
            }
        }
        let mut shape = first;
        shape[axis] = total;
        self.push("concat", shape, out, Op::Concat { xs: xs.to_vec(), axis }, xs)
    }

    /// Reorders axes: output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, x: Var, perm: &[usize]) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        let mut seen = vec![false; sx.len()];
        if perm.len() != sx.len() || perm.iter().any(|&p| p >= sx.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(shape_err("permute", &sx, perm));
        }
        let xd = self.data(x);
        let mut out = vec![T::zero(); xd.len()];
        for_each_permuted(&sx, perm, |d, s| out[d] = xd[s]);
        let shape = perm.iter().map(|&p| sx[p]).collect();
        self.push("permute", shape, out, Op::Permute { x, perm: perm.to_vec() }, &[x])
    }

    pub fn transpose(&mut self, x: Var, a1: usize, a2: usize) -> Result<Var> {
        let mut perm: Vec<usize> = (0..self.shape(x).len()).collect();
        if a1 >= perm.len() || a2 >= perm.len() {
            return Err(shape_err("transpose", self.shape(x), &[a1, a2]));
        }
        perm.swap(a1, a2);
        self.permute(x, &perm)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        if numel(shape) != self.value(x).numel() || shape.contains(&0) {
            return Err(shape_err("reshape", self.shape(x), shape));
        }
        let data = self.data(x).to_vec();
        self.push("reshape", shape.to_vec(), data, Op::Reshape { x }, &[x])
    }
}

pub(crate) fn slice_backward<T: Real>(graph: &Graph<T>, x: Var, y: Var, axis: usize, start: usize, g: &[T]) -> Vec<T> {
    let (outer, n, inner) = split_axis(graph.shape(x), axis);
    let len = graph.shape(y)[axis];
    let mut dx = vec![T::zero(); outer * n * inner];
    for o in 0..outer {
        dx[(o * n + start) * inner..(o * n + start + len) * inner].copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
    }
    dx
}

pub(crate) fn concat_backward<T: Real>(graph: &Graph<T>, xs: &[Var], axis: usize, g: &[T], give: &mut Sink<T>) {
    let first = graph.shape(xs[0]);
    let (outer, _, inner) = split_axis(first, axis);
    let total: usize = xs.iter().map(|&v| graph.shape(v)[axis]).sum();
    let mut offset = 0;
    for &v in xs {
        let n = graph.shape(v)[axis];
        if graph.wants(v) {
            let mut d = Vec::with_capacity(outer * n * inner);
            for o in 0..outer {
                let base = (o * total + offset) * inner;
                d.extend_from_slice(&g[base..base + n * inner]);
            }
            give(v, d);
        }
        offset += n;
    }
}

pub(crate) fn permute_backward<T: Real>(graph: &Graph<T>, x: Var, perm: &[usize], g: &[T]) -> Vec<T> {
    let mut dx = vec![T::zero(); g.len()];
    for_each_permuted(graph.shape(x), perm, |d, s| dx[s] = g[d]);
    dx
}
