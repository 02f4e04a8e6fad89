use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    Normal { std: f64 },
    Uniform { limit: f64 },
}

/// Named trainable tensors in insertion order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    entries: Vec<(String, Tensor<T>)>,
    index: BTreeMap<String, usize>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new(), index: BTreeMap::new() }
    }

    pub fn add(&mut self, name: &str, mut tensor: Tensor<T>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Invalid(format!("duplicate parameter name {name}")));
        }
        tensor.requires_grad = true;
        tensor.grad = None;
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), tensor));
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn add_init<R: Rng + ?Sized>(&mut self, name: &str, shape: &[usize], init: Init, rng: &mut R) -> Result<ParamId> {
        let t = match init {
            Init::Zeros => Tensor::zeros(shape),
            Init::Ones => Tensor::full(shape, T::one()),
            Init::Normal { std } => Tensor::randn(shape, std, rng),
            Init::Uniform { limit } => {
                let n = shape.iter().product();
                Tensor::new(shape, (0..n).map(|_| T::lit(rng.random_range(-limit..=limit))).collect())?
            }
        };
        self.add(name, t)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].1
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.entries[id.0].1
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar parameter count.
    pub fn num_params(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zero_grad(&mut self) {
        for (_, t) in &mut self.entries {
            t.grad = None;
        }
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self.entries.iter().map(|(n, t)| (n.clone(), t.cast())).collect(),
            index: self.index.clone(),
        }
    }

    /// Replaces values from `(name, shape, data)` triples; names and shapes must match exactly.
    pub fn assign<'a>(&mut self, items: impl IntoIterator<Item = (&'a str, &'a [usize], &'a [f32])>) -> Result<()> {
        let mut seen = 0;
        for (name, shape, data) in items {
            let id = self.id(name).ok_or_else(|| Error::Invalid(format!("unknown parameter {name}")))?;
            let t = self.get_mut(id);
            if t.shape() != shape {
                return Err(crate::error::shape_err("assign", t.shape(), shape));
            }
            t.data_mut().iter_mut().zip(data).for_each(|(d, s)| *d = T::lit(*s as f64));
            seen += 1;
        }
        if seen != self.len() {
            return Err(Error::Invalid(format!("expected {} parameters, got {seen}", self.len())));
        }
        Ok(())
    }
}
