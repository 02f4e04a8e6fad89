use super::Sink;
use crate::error::{shape_err, Result};
use crate::graph::{Graph, Op, Var};
use crate::real::gemm;
use crate::Real;

/// Where the kernel sits relative to the output position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// Output `t` sees inputs `t - (K-1)·d ..= t` only.
    Causal,
    /// Kernel centered on `t` (odd kernels are symmetric).
    Same,
}

impl Padding {
    /// Input offset of kernel tap `k` relative to the output position.
    fn offset(self, k: usize, kernel: usize, dilation: usize) -> isize {
        match self {
            Padding::Causal => -(((kernel - 1 - k) * dilation) as isize),
            Padding::Same => (k as isize - ((kernel - 1) / 2) as isize) * dilation as isize,
        }
    }
}

/// Column matrix `[cin·K, T]` for one batch element.
fn im2col<T: Real>(x: &[T], cin: usize, t: usize, kernel: usize, dilation: usize, padding: Padding, col: &mut [T]) {
    for c in 0..cin {
        let row_in = &x[c * t..(c + 1) * t];
        for k in 0..kernel {
            let off = padding.offset(k, kernel, dilation);
            let row = &mut col[(c * kernel + k) * t..(c * kernel + k + 1) * t];
            for (i, dst) in row.iter_mut().enumerate() {
                let j = i as isize + off;
                *dst = if j >= 0 && (j as usize) < t { row_in[j as usize] } else { T::zero() };
            }
        }
    }
}

fn col2im<T: Real>(col: &[T], cin: usize, t: usize, kernel: usize, dilation: usize, padding: Padding, dx: &mut [T]) {
    for c in 0..cin {
        for k in 0..kernel {
            let off = padding.offset(k, kernel, dilation);
            let row = &col[(c * kernel + k) * t..(c * kernel + k + 1) * t];
            for (i, v) in row.iter().enumerate() {
                let j = i as isize + off;
                if j >= 0 && (j as usize) < t {
                    dx[c * t + j as usize] += *v;
                }
            }
        }
    }
}

impl<T: Real> Graph<T> {
    /// 1-D convolution of `x [B, Cin, T]` with `w [Cout, Cin, K]` and optional
    /// `bias [Cout]`, dilation `d`, output length `T`.
    pub fn conv1d(&mut self, x: Var, w: Var, bias: Option<Var>, dilation: usize, padding: Padding) -> Result<Var> {
        let (sx, sw) = (self.shape(x).to_vec(), self.shape(w).to_vec());
        if sx.len() != 3 || sw.len() != 3 || sx[1] != sw[1] || dilation == 0 {
            return Err(shape_err("conv1d", &sx, &sw));
        }
        if let Some(b) = bias {
            if self.shape(b) != [sw[0]] {
                return Err(shape_err("conv1d bias", self.shape(b), &sw));
            }
        }
        let (batch, cin, t) = (sx[0], sx[1], sx[2]);
        let (cout, kernel) = (sw[0], sw[2]);
        let mut out = vec![T::zero(); batch * cout * t];
        let mut col = vec![T::zero(); cin * kernel * t];
        let (xd, wd) = (self.data(x), self.data(w));
        for b in 0..batch {
            let xb = &xd[b * cin * t..(b + 1) * cin * t];
            let src: &[T] = if kernel == 1 {
                xb
            } else {
                im2col(xb, cin, t, kernel, dilation, padding, &mut col);
                &col
            };
            gemm(cout, cin * kernel, t, wd, false, src, false, &mut out[b * cout * t..], false);
        }
        if let Some(bv) = bias {
            let bd = self.data(bv);
            for (i, row) in out.chunks_mut(t).enumerate() {
                let bb = bd[i % cout];
                row.iter_mut().for_each(|v| *v += bb);
            }
        }
        let inputs: Vec<Var> = [Some(x), Some(w), bias].into_iter().flatten().collect();
        self.push("conv1d", vec![batch, cout, t], out, Op::Conv1d { x, w, bias, dilation, padding }, &inputs)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv1d_backward<T: Real>(
    graph: &Graph<T>,
    x: Var,
    w: Var,
    bias: Option<Var>,
    dilation: usize,
    padding: Padding,
    g: &[T],
    give: &mut Sink<T>,
) {
    let (sx, sw) = (graph.shape(x), graph.shape(w));
    let (batch, cin, t) = (sx[0], sx[1], sx[2]);
    let (cout, kernel) = (sw[0], sw[2]);
    let (xd, wd) = (graph.data(x), graph.data(w));
    let ck = cin * kernel;
    let mut col = vec![T::zero(); ck * t];
    let mut dw = graph.wants(w).then(|| vec![T::zero(); cout * ck]);
    let mut dx = graph.wants(x).then(|| vec![T::zero(); xd.len()]);
    for b in 0..batch {
        let gb = &g[b * cout * t..(b + 1) * cout * t];
        if let Some(dw) = dw.as_mut() {
            let xb = &xd[b * cin * t..(b + 1) * cin * t];
            let src: &[T] = if kernel == 1 {
                xb
            } else {
                im2col(xb, cin, t, kernel, dilation, padding, &mut col);
                &col
            };
            gemm(cout, t, ck, gb, false, src, true, dw, true);
        }
        if let Some(dx) = dx.as_mut() {
            let dxb = &mut dx[b * cin * t..(b + 1) * cin * t];
            if kernel == 1 {
                gemm(ck, cout, t, wd, true, gb, false, dxb, true);
            } else {
                gemm(ck, cout, t, wd, true, gb, false, &mut col, false);
                col2im(&col, cin, t, kernel, dilation, padding, dxb);
            }
        }
    }
    if let Some(dw) = dw {
        give(w, dw);
    }
    if let Some(dx) = dx {
        give(x, dx);
    }
    if let Some(bv) = bias {
        if graph.wants(bv) {
            let mut db = vec![T::zero(); cout];
            for (i, row) in g.chunks(t).enumerate() {
                db[i % cout] += row.iter().copied().sum::<T>();
            }
            give(bv, db);
        }
    }
}
