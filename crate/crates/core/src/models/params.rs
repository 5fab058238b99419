use rand::Rng;

use crate::numerics::{Real, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    /// Trained by the optimizer.
    Param,
    /// State carried alongside the parameters (batch-norm running statistics).
    Buffer,
}

#[derive(Clone, Debug)]
pub struct Entry<T: Real> {
    pub name: String,
    pub tensor: Tensor<T>,
    pub kind: EntryKind,
}

/// Ordered collection of named tensors. Slot indices are stable for the
/// lifetime of a model and double as graph parameter ids.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T: Real> {
    entries: Vec<Entry<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    fn push(&mut self, name: String, tensor: Tensor<T>, kind: EntryKind) -> usize {
        debug_assert!(self.index_of(&name).is_none(), "duplicate tensor name {name}");
        self.entries.push(Entry { name, tensor, kind });
        self.entries.len() - 1
    }

    pub fn add_param(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> usize {
        self.push(name.into(), tensor, EntryKind::Param)
    }

    pub fn add_buffer(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> usize {
        self.push(name.into(), tensor, EntryKind::Buffer)
    }

    /// Fan-in scaled uniform initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn add_uniform(&mut self, name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> usize {
        let bound = (1.0 / fan_in as f64).sqrt();
        let t = Tensor::from_fn(shape, |_| T::lit(rng.random_range(-bound..bound)));
        self.add_param(name, t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry<T>] {
        &self.entries
    }

    pub fn entry(&self, slot: usize) -> &Entry<T> {
        &self.entries[slot]
    }

    pub fn tensor(&self, slot: usize) -> &Tensor<T> {
        &self.entries[slot].tensor
    }

    pub fn tensor_mut(&mut self, slot: usize) -> &mut Tensor<T> {
        &mut self.entries[slot].tensor
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index_of(name).map(|i| &self.entries[i].tensor)
    }

    pub fn param_slots(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i].kind == EntryKind::Param)
            .collect()
    }

    /// Mutable trainable tensors, in the order of [`Self::param_slots`].
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.entries
            .iter_mut()
            .filter(|e| e.kind == EntryKind::Param)
            .map(|e| &mut e.tensor)
            .collect()
    }

    /// Number of trainable scalars.
    pub fn num_parameters(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == EntryKind::Param)
            .map(|e| e.tensor.len())
            .sum()
    }

    /// Replaces the tensor called `name`, checking that the shape is unchanged.
    pub fn assign(&mut self, name: &str, tensor: Tensor<T>) -> Result<()> {
        let slot = self
            .index_of(name)
            .ok_or_else(|| Error::Shape(format!("unknown tensor {name}")))?;
        let current = &mut self.entries[slot].tensor;
        if current.shape() != tensor.shape() {
            return Err(Error::Shape(format!(
                "tensor {name}: expected shape {:?}, got {:?}",
                current.shape(),
                tensor.shape()
            )));
        }
        *current = tensor;
        Ok(())
    }

    /// Bitwise equality of names, kinds and values.
    pub fn bit_eq(&self, other: &ParamStore<T>) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind && a.tensor.bit_eq(&b.tensor))
    }
}
