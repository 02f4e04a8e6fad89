use super::Sink;
use crate::error::{shape_err, Result};
use crate::graph::{Graph, Op, Var};
use crate::real::gemm;
use crate::Real;

impl<T: Real> Graph<T> {
    /// `a [..., m, k] · b` where `b` is `[k, n]` shared across the leading
    /// axes or `[..., k, n]` with the same leading axes as `a`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, false)
    }

    /// `a [..., m, k] · bᵀ` with `b` of shape `[n, k]` or `[..., n, k]`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, true)
    }

    /// `x · w + bias` over the last axis of `x`.
    pub fn linear(&mut self, x: Var, w: Var, bias: Option<Var>) -> Result<Var> {
        let y = self.matmul(x, w)?;
        match bias {
            Some(b) => self.add(y, b),
            None => Ok(y),
        }
    }

    fn matmul_impl(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let op = if trans_b { "matmul_t" } else { "matmul" };
        if sa.len() < 2 || sb.len() < 2 {
            return Err(shape_err(op, &sa, &sb));
        }
        let r = sa.len();
        let (m, k) = (sa[r - 2], sa[r - 1]);
        let batch: usize = sa[..r - 2].iter().product();
        let rb = sb.len();
        let b_shared = rb == 2;
        if !b_shared && sb[..rb - 2] != sa[..r - 2] {
            return Err(shape_err(op, &sa, &sb));
        }
        let (kb, n) = if trans_b { (sb[rb - 1], sb[rb - 2]) } else { (sb[rb - 2], sb[rb - 1]) };
        if kb != k {
            return Err(shape_err(op, &sa, &sb));
        }
        let mut out = vec![T::zero(); batch * m * n];
        let (ad, bd) = (self.data(a), self.data(b));
        if b_shared {
            gemm(batch * m, k, n, ad, false, bd, trans_b, &mut out, false);
        } else {
            for i in 0..batch {
                gemm(m, k, n, &ad[i * m * k..], false, &bd[i * k * n..], trans_b, &mut out[i * m * n..], false);
            }
        }
        let mut shape = sa[..r - 2].to_vec();
        shape.extend([m, n]);
        self.push(op, shape, out, Op::MatMul { a, b, batch, m, k, n, b_shared, trans_b }, &[a, b])
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul_backward<T: Real>(
    graph: &Graph<T>,
    a: Var,
    b: Var,
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
    b_shared: bool,
    trans_b: bool,
    g: &[T],
    give: &mut Sink<T>,
) {
    let (ad, bd) = (graph.data(a), graph.data(b));
    if graph.wants(a) {
        let mut da = vec![T::zero(); batch * m * k];
        if b_shared {
            gemm(batch * m, n, k, g, false, bd, !trans_b, &mut da, false);
        } else {
            for i in 0..batch {
                gemm(m, n, k, &g[i * m * n..], false, &bd[i * k * n..], !trans_b, &mut da[i * m * k..], false);
            }
        }
        give(a, da);
    }
    if graph.wants(b) {
        let mut db = vec![T::zero(); bd.len()];
        let (rows, blocks) = if b_shared { (batch * m, 1) } else { (m, batch) };
        for i in 0..blocks {
            let (ga, aa) = (&g[i * rows * n..], &ad[i * rows * k..]);
            let dst = &mut db[i * k * n..];
            if trans_b {
                gemm(n, rows, k, ga, true, aa, false, dst, false);
            } else {
                gemm(k, rows, n, aa, true, ga, false, dst, false);
            }
        }
        give(b, db);
    }
}
