pub(crate) mod conv;
pub(crate) mod elementwise;
pub(crate) mod linalg;
pub(crate) mod norm;
pub(crate) mod rotary;
pub(crate) mod shape;

pub use conv::Padding;
pub use elementwise::gelu_scalar;
pub(crate) use elementwise::Unary;
pub use norm::attention_mask;
pub use rotary::rotary_encode;

use crate::graph::Var;

/// Receives the gradient contribution for one input.
pub(crate) type Sink<'a, T> = dyn FnMut(Var, Vec<T>) + 'a;

/// `(outer, len, inner)` around `axis` of a row-major shape.
pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (shape[..axis].iter().product(), shape[axis], shape[axis + 1..].iter().product())
}
