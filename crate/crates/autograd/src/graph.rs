use crate::error::{Error, Result};
use crate::ops::{self, Padding, Unary};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;
use crate::Real;

/// Handle to a value recorded in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

pub(crate) enum Op<T> {
    Leaf,
    MatMul { a: Var, b: Var, batch: usize, m: usize, k: usize, n: usize, b_shared: bool, trans_b: bool },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { a: Var, c: T },
    Unary { x: Var, kind: Unary },
    Conv1d { x: Var, w: Var, bias: Option<Var>, dilation: usize, padding: Padding },
    LayerNorm { x: Var, gamma: Var, beta: Var, rstd: Vec<T> },
    Softmax { x: Var, axis: usize },
    MaskedSoftmax { x: Var },
    Slice { x: Var, axis: usize, start: usize },
    Concat { xs: Vec<Var>, axis: usize },
    Permute { x: Var, perm: Vec<usize> },
    Reshape { x: Var },
    Rotary { x: Var, offset: usize, base: f64 },
    Mse { pred: Var, target: Var },
    Sum { x: Var },
    Mean { x: Var },
}

pub(crate) struct Node<T> {
    pub(crate) value: Tensor<T>,
    pub(crate) op: Op<T>,
    pub(crate) needs_grad: bool,
    pub(crate) grad: Option<Vec<T>>,
}

/// Records operations in execution order, which is a topological order, so
/// backward is a single reverse sweep.
pub struct Graph<T: Real> {
    pub(crate) nodes: Vec<Node<T>>,
    bindings: Vec<(ParamId, Var)>,
    check_finite: bool,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    /// Non-finite checking is on in debug builds.
    pub fn new() -> Self {
        Self { nodes: Vec::new(), bindings: Vec::new(), check_finite: cfg!(debug_assertions) }
    }

    pub fn set_check_finite(&mut self, on: bool) {
        self.check_finite = on;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a leaf; it receives a gradient iff `tensor.requires_grad`.
    pub fn leaf(&mut self, tensor: Tensor<T>) -> Var {
        let needs = tensor.requires_grad;
        self.nodes.push(Node { value: tensor, op: Op::Leaf, needs_grad: needs, grad: None });
        Var(self.nodes.len() - 1)
    }

    /// Records a constant input.
    pub fn input(&mut self, mut tensor: Tensor<T>) -> Var {
        tensor.requires_grad = false;
        self.leaf(tensor)
    }

    /// Binds a stored parameter, once per graph.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&(_, v)) = self.bindings.iter().find(|(p, _)| *p == id) {
            return v;
        }
        let t = store.get(id);
        let mut value = Tensor::from_trusted(t.shape().to_vec(), t.data().to_vec());
        value.requires_grad = t.requires_grad;
        let v = self.leaf(value);
        self.bindings.push((id, v));
        v
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn data(&self, v: Var) -> &[T] {
        self.nodes[v.0].value.data()
    }

    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub(crate) fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub(crate) fn push(&mut self, name: &'static str, shape: Vec<usize>, data: Vec<T>, op: Op<T>, inputs: &[Var]) -> Result<Var> {
        if self.check_finite && data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: name });
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value: Tensor::from_trusted(shape, data), op, needs_grad, grad: None });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Reverse-mode sweep from a scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let node = &self.nodes[loss.0];
        if node.value.numel() != 1 {
            return Err(Error::NotScalar(node.value.shape().to_vec()));
        }
        if !node.needs_grad {
            return Err(Error::Detached);
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[loss.0].grad = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].needs_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else { continue };
            let contributions = self.contributions(i, &g);
            self.nodes[i].grad = Some(g);
            for (v, dv) in contributions {
                let slot = &mut self.nodes[v.0].grad;
                match slot {
                    Some(acc) => acc.iter_mut().zip(&dv).for_each(|(a, d)| *a += *d),
                    None => *slot = Some(dv),
                }
            }
        }
        Ok(())
    }

    /// Adds the gradients of bound parameters into `store`.
    pub fn accumulate_grads(&self, store: &mut ParamStore<T>) {
        for &(id, v) in &self.bindings {
            if let Some(g) = self.grad(v) {
                let t = store.get_mut(id);
                match &mut t.grad {
                    Some(acc) => acc.iter_mut().zip(g).for_each(|(a, d)| *a += *d),
                    None => t.grad = Some(g.to_vec()),
                }
            }
        }
    }

    fn contributions(&self, i: usize, g: &[T]) -> Vec<(Var, Vec<T>)> {
        let mut out = Vec::new();
        let mut give = |v: Var, d: Vec<T>| {
            if self.wants(v) {
                out.push((v, d));
            }
        };
        match &self.nodes[i].op {
            Op::Leaf => {}
            &Op::MatMul { a, b, batch, m, k, n, b_shared, trans_b } => {
                ops::linalg::matmul_backward(self, a, b, batch, m, k, n, b_shared, trans_b, g, &mut give)
            }
            &Op::Add { a, b } => ops::elementwise::add_backward(self, a, b, T::one(), g, &mut give),
            &Op::Sub { a, b } => ops::elementwise::add_backward(self, a, b, -T::one(), g, &mut give),
            &Op::Mul { a, b } => ops::elementwise::mul_backward(self, a, b, g, &mut give),
            &Op::Scale { a, c } => give(a, g.iter().map(|v| *v * c).collect()),
            &Op::Unary { x, kind } => give(x, ops::elementwise::unary_backward(self, x, Var(i), kind, g)),
            &Op::Conv1d { x, w, bias, dilation, padding } => {
                ops::conv::conv1d_backward(self, x, w, bias, dilation, padding, g, &mut give)
            }
            Op::LayerNorm { x, gamma, beta, rstd } => {
                ops::norm::layer_norm_backward(self, *x, *gamma, *beta, rstd, g, &mut give)
            }
            &Op::Softmax { x, axis } => give(x, ops::norm::softmax_backward(self.value(Var(i)), axis, g)),
            &Op::MaskedSoftmax { x } => {
                let y = self.value(Var(i));
                give(x, ops::norm::softmax_backward(y, y.shape().len() - 1, g))
            }
            &Op::Slice { x, axis, start } => give(x, ops::shape::slice_backward(self, x, Var(i), axis, start, g)),
            Op::Concat { xs, axis } => ops::shape::concat_backward(self, xs, *axis, g, &mut give),
            Op::Permute { x, perm } => give(*x, ops::shape::permute_backward(self, *x, perm, g)),
            &Op::Reshape { x } => give(x, g.to_vec()),
            &Op::Rotary { x, offset, base } => {
                give(x, ops::rotary::rotary_apply(self.shape(x), g, offset, base, true))
            }
            &Op::Mse { pred, target } => ops::elementwise::mse_backward(self, pred, target, g[0], &mut give),
            &Op::Sum { x } => give(x, vec![g[0]; self.value(x).numel()]),
            &Op::Mean { x } => {
                let n = self.value(x).numel();
                give(x, vec![g[0] / T::lit(n as f64); n])
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares_gradient() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::new(&[3], vec![1.0, 2.0, 3.0]).unwrap().with_grad());
        let sq = g.mul(x, x).unwrap();
        let s = g.sum(sq).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn unrelated_input_gets_zero_and_detached_errors() {
        let mut g = Graph::<f32>::new();
        let x = g.leaf(Tensor::new(&[2], vec![1.0, 2.0]).unwrap().with_grad());
        let y = g.leaf(Tensor::new(&[2], vec![3.0, 4.0]).unwrap().with_grad());
        let s = g.sum(x).unwrap();
        g.backward(s).unwrap();
        assert!(g.grad(y).map_or(true, |d| d.iter().all(|v| *v == 0.0)));

        let c = g.input(Tensor::new(&[2], vec![1.0, 1.0]).unwrap());
        let cs = g.sum(c).unwrap();
        assert!(matches!(g.backward(cs), Err(Error::Detached)));
        assert!(matches!(g.backward(x), Err(Error::NotScalar(_))));
    }

    #[test]
    fn non_finite_is_reported() {
        let mut g = Graph::<f32>::new();
        g.set_check_finite(true);
        let x = g.input(Tensor::new(&[1], vec![f32::MAX]).unwrap());
        assert!(matches!(g.mul(x, x), Err(Error::NonFinite { op: "mul" })));
    }
}
