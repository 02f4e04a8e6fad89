//! Central finite-difference verification of analytic gradients.
//!
//! Each [`GradCase`] draws random small inputs for one op. The analytic
//! gradient of `Σ out ⊙ r` (fixed random `r`) is computed in the requested
//! precision and compared against a central difference evaluated in `f64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ops::{attention_mask, Padding};
use crate::{Graph, Real, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    MatMul,
    MatMulT,
    BatchedMatMul,
    Linear,
    Add,
    Sub,
    Mul,
    Scale,
    Relu,
    Gelu,
    Tanh,
    Sigmoid,
    Conv1dCausal,
    Conv1dSame,
    LayerNorm,
    Softmax,
    MaskedSoftmax,
    Slice,
    Concat,
    Transpose,
    Reshape,
    Rotary,
    Mse,
    Sum,
    Mean,
}

impl OpKind {
    pub const ALL: [OpKind; 25] = [
        OpKind::MatMul,
        OpKind::MatMulT,
        OpKind::BatchedMatMul,
        OpKind::Linear,
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Scale,
        OpKind::Relu,
        OpKind::Gelu,
        OpKind::Tanh,
        OpKind::Sigmoid,
        OpKind::Conv1dCausal,
        OpKind::Conv1dSame,
        OpKind::LayerNorm,
        OpKind::Softmax,
        OpKind::MaskedSoftmax,
        OpKind::Slice,
        OpKind::Concat,
        OpKind::Transpose,
        OpKind::Reshape,
        OpKind::Rotary,
        OpKind::Mse,
        OpKind::Sum,
        OpKind::Mean,
    ];
}

/// One op applied to random inputs, plus the op's integer arguments.
#[derive(Clone, Debug)]
pub struct GradCase {
    pub kind: OpKind,
    pub inputs: Vec<Tensor<f64>>,
    pub arg: usize,
}

fn randn(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::randn(shape, 1.0, rng)
}

impl GradCase {
    pub fn random(kind: OpKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9e37_79b9));
        let mut d = |lo: usize, hi: usize| rng.random_range(lo..=hi);
        let (a, b, c, e) = (d(1, 3), d(2, 4), d(2, 5), d(1, 3));
        let arg = d(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
        let r = &mut rng;
        let inputs = match kind {
            OpKind::MatMul => vec![randn(r, &[a, b, c]), randn(r, &[c, e + 1])],
            OpKind::MatMulT => vec![randn(r, &[a, b, c]), randn(r, &[e + 1, c])],
            OpKind::BatchedMatMul => vec![randn(r, &[a, b, c]), randn(r, &[a, c, e])],
            OpKind::Linear => vec![randn(r, &[b, c]), randn(r, &[c, e]), randn(r, &[e])],
            OpKind::Add | OpKind::Sub | OpKind::Mul => vec![randn(r, &[a, b, c]), randn(r, &[b, c])],
            OpKind::Relu => {
                // keep clear of the kink so the difference quotient is exact
                let t = randn(r, &[a, b, c]);
                let data = t.data().iter().map(|v| if v.abs() < 0.05 { v.signum() * 0.05 + v } else { *v }).collect();
                vec![Tensor::new(&[a, b, c], data).expect("shape")]
            }
            OpKind::Scale | OpKind::Gelu | OpKind::Tanh | OpKind::Sigmoid | OpKind::Sum | OpKind::Mean => {
                vec![randn(r, &[a, b, c])]
            }
            OpKind::Conv1dCausal | OpKind::Conv1dSame => {
                let k = if kind == OpKind::Conv1dSame { 3 } else { d2(r, 1, 3) };
                vec![randn(r, &[a, b, 6 + c]), randn(r, &[e, b, k]), randn(r, &[e])]
            }
            OpKind::LayerNorm => vec![randn(r, &[a, b, c + 1]), randn(r, &[c + 1]), randn(r, &[c + 1])],
            OpKind::Softmax => vec![randn(r, &[a, b, c])],
            OpKind::MaskedSoftmax => vec![randn(r, &[a, b + 1, b + 1])],
            OpKind::Slice | OpKind::Transpose | OpKind::Reshape => vec![randn(r, &[a, b + 1, c])],
            OpKind::Concat => vec![randn(r, &[a, b, c]), randn(r, &[a, e, c])],
            OpKind::Rotary => vec![randn(r, &[a, b, 2 * c])],
            OpKind::Mse => vec![randn(r, &[a, b, c]), randn(r, &[a, b, c])],
        };
        let inputs = inputs.into_iter().map(|t| t.with_grad()).collect();
        Self { kind, inputs, arg }
    }

    pub fn build<T: Real>(&self, g: &mut Graph<T>, x: &[Var]) -> Result<Var> {
        match self.kind {
            OpKind::MatMul | OpKind::BatchedMatMul => g.matmul(x[0], x[1]),
            OpKind::MatMulT => g.matmul_t(x[0], x[1]),
            OpKind::Linear => g.linear(x[0], x[1], Some(x[2])),
            OpKind::Add => g.add(x[0], x[1]),
            OpKind::Sub => g.sub(x[0], x[1]),
            OpKind::Mul => g.mul(x[0], x[1]),
            OpKind::Scale => g.scale(x[0], T::lit(-1.7)),
            OpKind::Relu => g.relu(x[0]),
            OpKind::Gelu => g.gelu(x[0]),
            OpKind::Tanh => g.tanh(x[0]),
            OpKind::Sigmoid => g.sigmoid(x[0]),
            OpKind::Conv1dCausal => g.conv1d(x[0], x[1], Some(x[2]), self.arg, Padding::Causal),
            OpKind::Conv1dSame => g.conv1d(x[0], x[1], Some(x[2]), self.arg, Padding::Same),
            OpKind::LayerNorm => g.layer_norm(x[0], x[1], x[2], 1e-5),
            OpKind::Softmax => g.softmax(x[0], self.arg % 3),
            OpKind::MaskedSoftmax => {
                let t = g.shape(x[0])[1];
                g.masked_softmax(x[0], &attention_mask(t, self.arg + 1))
            }
            OpKind::Slice => {
                let n = g.shape(x[0])[1];
                g.slice(x[0], 1, 1, n - 1)
            }
            OpKind::Concat => g.concat(&[x[0], x[1]], 1),
            OpKind::Transpose => g.transpose(x[0], 0, 2),
            OpKind::Reshape => {
                let s = g.shape(x[0]).to_vec();
                g.reshape(x[0], &[s[0] * s[1], s[2]])
            }
            OpKind::Rotary => g.rotary(x[0], 3 + self.arg),
            OpKind::Mse => g.mse(x[0], x[1]),
            OpKind::Sum => g.sum(x[0]),
            OpKind::Mean => g.mean(x[0]),
        }
    }
}

fn d2(r: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    r.random_range(lo..=hi)
}

#[derive(Clone, Debug)]
pub struct GradReport {
    pub kind: OpKind,
    /// Norm-wise relative error per input.
    pub rel_errors: Vec<f64>,
}

impl GradReport {
    pub fn max_rel_error(&self) -> f64 {
        self.rel_errors.iter().copied().fold(0.0, f64::max)
    }
}

fn projected_loss<T: Real>(case: &GradCase, inputs: &[Tensor<f64>], weights: &Tensor<f64>) -> Result<(Graph<T>, Vec<Var>, Var)> {
    let mut g = Graph::<T>::new();
    g.set_check_finite(true);
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.cast())).collect();
    let out = case.build(&mut g, &vars)?;
    let w = g.input(weights.reshaped(g.shape(out))?.cast());
    let prod = g.mul(out, w)?;
    let loss = g.sum(prod)?;
    Ok((g, vars, loss))
}

/// Compares the analytic gradient in precision `T` against an `f64`
/// central difference with step `eps`.
pub fn check_case<T: Real>(case: &GradCase, eps: f64) -> Result<GradReport> {
    let out_len = {
        let mut g = Graph::<f64>::new();
        let vars: Vec<Var> = case.inputs.iter().map(|t| g.leaf(t.clone())).collect();
        let out = case.build(&mut g, &vars)?;
        g.value(out).numel()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xfd);
    let weights = Tensor::randn(&[out_len], 1.0, &mut rng);

    let (mut g, vars, loss) = projected_loss::<T>(case, &case.inputs, &weights)?;
    g.backward(loss)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(&case.inputs)
        .map(|(v, t)| g.grad(*v).map_or(vec![0.0; t.numel()], |d| d.iter().map(|x| x.as_f64()).collect()))
        .collect();

    let eval = |inputs: &[Tensor<f64>]| -> Result<f64> {
        let (g, _, loss) = projected_loss::<f64>(case, inputs, &weights)?;
        Ok(g.data(loss)[0])
    };
    let mut rel_errors = Vec::with_capacity(case.inputs.len());
    for (i, input) in case.inputs.iter().enumerate() {
        let mut numeric = vec![0.0; input.numel()];
        let mut work = case.inputs.clone();
        for (j, slot) in numeric.iter_mut().enumerate() {
            let orig = input.data()[j];
            work[i].data_mut()[j] = orig + eps;
            let up = eval(&work)?;
            work[i].data_mut()[j] = orig - eps;
            let down = eval(&work)?;
            work[i].data_mut()[j] = orig;
            *slot = (up - down) / (2.0 * eps);
        }
        let diff = analytic[i].iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic[i].iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
        rel_errors.push(if scale < 1e-12 { diff } else { diff / scale });
    }
    Ok(GradReport { kind: case.kind, rel_errors })
}
