use super::Sink;
use crate::error::{shape_err, Result};
use crate::graph::{Graph, Op, Var};
use crate::tensor::numel;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Unary {
    Relu,
    Gelu,
    Tanh,
    Sigmoid,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub fn gelu_scalar<T: Real>(x: T) -> T {
    let u = T::lit(GELU_C) * (x + T::lit(GELU_A) * x * x * x);
    T::lit(0.5) * x * (T::one() + u.tanh())
}

fn gelu_grad<T: Real>(x: T) -> T {
    let u = T::lit(GELU_C) * (x + T::lit(GELU_A) * x * x * x);
    let t = u.tanh();
    let du = T::lit(GELU_C) * (T::one() + T::lit(3.0 * GELU_A) * x * x);
    T::lit(0.5) * (T::one() + t) + T::lit(0.5) * x * (T::one() - t * t) * du
}

/// Number of times `b` repeats to cover `a` when `b`'s shape is a suffix of `a`'s.
fn suffix_repeat(sa: &[usize], sb: &[usize]) -> Option<usize> {
    (sb.len() <= sa.len() && sa[sa.len() - sb.len()..] == *sb).then(|| numel(sa) / numel(sb))
}

impl<T: Real> Graph<T> {
    fn binary(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T, op: Op<T>) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if suffix_repeat(&sa, &sb).is_none() {
            return Err(shape_err(name, &sa, &sb));
        }
        let (ad, bd) = (self.data(a), self.data(b));
        let nb = bd.len();
        let out = ad.iter().enumerate().map(|(i, &x)| f(x, bd[i % nb])).collect();
        self.push(name, sa, out, op, &[a, b])
    }

    /// Elementwise sum; `b` may broadcast over the leading axes of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub { a, b })
    }

    /// Elementwise product; `b` may broadcast over the leading axes of `a`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul { a, b })
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        let out = self.data(a).iter().map(|&x| x * c).collect();
        self.push("scale", self.shape(a).to_vec(), out, Op::Scale { a, c }, &[a])
    }

    fn unary(&mut self, x: Var, kind: Unary) -> Result<Var> {
        let f: fn(T) -> T = match kind {
            Unary::Relu => |v| if v > T::zero() { v } else { T::zero() },
            Unary::Gelu => gelu_scalar,
            Unary::Tanh => |v| v.tanh(),
            Unary::Sigmoid => |v| T::one() / (T::one() + (-v).exp()),
        };
        let out = self.data(x).iter().map(|&v| f(v)).collect();
        let name = match kind {
            Unary::Relu => "relu",
            Unary::Gelu => "gelu",
            Unary::Tanh => "tanh",
            Unary::Sigmoid => "sigmoid",
        };
        self.push(name, self.shape(x).to_vec(), out, Op::Unary { x, kind }, &[x])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Unary::Relu)
    }

    pub fn gelu(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Unary::Gelu)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Unary::Tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(x, Unary::Sigmoid)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.data(x).iter().copied().sum();
        self.push("sum", vec![1], vec![s], Op::Sum { x }, &[x])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let d = self.data(x);
        let s = d.iter().copied().sum::<T>() / T::lit(d.len() as f64);
        self.push("mean", vec![1], vec![s], Op::Mean { x }, &[x])
    }

    /// Mean of squared differences over all elements.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        if self.shape(pred) != self.shape(target) {
            return Err(shape_err("mse", self.shape(pred), self.shape(target)));
        }
        let (p, t) = (self.data(pred), self.data(target));
        let s = p.iter().zip(t).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>() / T::lit(p.len() as f64);
        self.push("mse", vec![1], vec![s], Op::Mse { pred, target }, &[pred, target])
    }
}

pub(crate) fn add_backward<T: Real>(graph: &Graph<T>, a: Var, b: Var, sign: T, g: &[T], give: &mut Sink<T>) {
    give(a, g.to_vec());
    if graph.wants(b) {
        let nb = graph.value(b).numel();
        let mut db = vec![T::zero(); nb];
        for (i, gv) in g.iter().enumerate() {
            db[i % nb] += *gv;
        }
        db.iter_mut().for_each(|v| *v *= sign);
        give(b, db);
    }
}

pub(crate) fn mul_backward<T: Real>(graph: &Graph<T>, a: Var, b: Var, g: &[T], give: &mut Sink<T>) {
    let (ad, bd) = (graph.data(a), graph.data(b));
    let nb = bd.len();
    if graph.wants(a) {
        give(a, g.iter().enumerate().map(|(i, gv)| *gv * bd[i % nb]).collect());
    }
    if graph.wants(b) {
        let mut db = vec![T::zero(); nb];
        for (i, gv) in g.iter().enumerate() {
            db[i % nb] += *gv * ad[i];
        }
        give(b, db);
    }
}

pub(crate) fn unary_backward<T: Real>(graph: &Graph<T>, x: Var, y: Var, kind: Unary, g: &[T]) -> Vec<T> {
    let (xd, yd) = (graph.data(x), graph.data(y));
    g.iter()
        .enumerate()
        .map(|(i, gv)| {
            let d = match kind {
                Unary::Relu => {
                    if xd[i] > T::zero() {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                Unary::Gelu => gelu_grad(xd[i]),
                Unary::Tanh => T::one() - yd[i] * yd[i],
                Unary::Sigmoid => yd[i] * (T::one() - yd[i]),
            };
            *gv * d
        })
        .collect()
}

pub(crate) fn mse_backward<T: Real>(graph: &Graph<T>, pred: Var, target: Var, g: T, give: &mut Sink<T>) {
    let (p, t) = (graph.data(pred), graph.data(target));
    let c = T::lit(2.0) * g / T::lit(p.len() as f64);
    let dp: Vec<T> = p.iter().zip(t).map(|(a, b)| (*a - *b) * c).collect();
    if graph.wants(target) {
        give(target, dp.iter().map(|v| -*v).collect());
    }
    give(pred, dp);
}
