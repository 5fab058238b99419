//! Reverse-mode tape.
//!
//! A [`Graph`] records every differentiable operation in execution order, so
//! node indices are already a topological order. [`Graph::backward`] walks the
//! nodes in reverse, accumulating vector-Jacobian products into per-node
//! gradient slots; fan-out is handled by summing contributions.

use crate::numerics::{Real, Tensor};
use crate::{Error, Result};

/// Vector-Jacobian product of one recorded operation.
pub trait BackwardFn<T: Real> {
    fn name(&self) -> &'static str;

    /// Returns one gradient per input. Entries whose `needs` flag is false may
    /// be `None`.
    fn backward(
        &self,
        grad: &Tensor<T>,
        inputs: &[&Tensor<T>],
        output: &Tensor<T>,
        needs: &[bool],
    ) -> Vec<Option<Tensor<T>>>;
}

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

struct Node<T: Real> {
    value: Tensor<T>,
    inputs: Vec<usize>,
    func: Option<Box<dyn BackwardFn<T>>>,
    requires_grad: bool,
    param: Option<usize>,
}

pub struct Graph<T: Real> {
    nodes: Vec<Node<T>>,
    consumed: bool,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    fn push(&mut self, node: Node<T>) -> Var {
        self.nodes.push(node);
        Var(self.nodes.len() - 1)
    }

    /// Constant input; no gradient is tracked.
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(Node {
            value,
            inputs: Vec::new(),
            func: None,
            requires_grad: false,
            param: None,
        })
    }

    /// Leaf that receives a gradient.
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(Node {
            value,
            inputs: Vec::new(),
            func: None,
            requires_grad: true,
            param: None,
        })
    }

    /// Leaf bound to slot `index` of a parameter store.
    pub fn param(&mut self, index: usize, value: Tensor<T>) -> Var {
        self.push(Node {
            value,
            inputs: Vec::new(),
            func: None,
            requires_grad: true,
            param: Some(index),
        })
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an operation whose output `value` was computed from `inputs`.
    pub fn apply(&mut self, inputs: &[Var], value: Tensor<T>, func: Box<dyn BackwardFn<T>>) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(Node {
            value,
            inputs: inputs.iter().map(|v| v.0).collect(),
            func: requires_grad.then_some(func),
            requires_grad,
            param: None,
        })
    }

    /// Drops every recorded node so the graph can be reused.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.consumed = false;
    }

    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::Tape("backward already ran on this tape; reset it first".into()));
        }
        let root = &self.nodes[loss.0];
        if !root.value.is_scalar() {
            return Err(Error::Tape(format!(
                "loss must be scalar, got shape {:?}",
                root.value.shape()
            )));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if root.requires_grad {
            grads[loss.0] = Some(Tensor::full(root.value.shape(), T::one()));
        }
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            let Some(func) = node.func.as_ref() else { continue };
            let Some(grad) = grads[idx].take() else { continue };
            let inputs: Vec<&Tensor<T>> = node.inputs.iter().map(|&i| &self.nodes[i].value).collect();
            let needs: Vec<bool> = node.inputs.iter().map(|&i| self.nodes[i].requires_grad).collect();
            let input_grads = func.backward(&grad, &inputs, &node.value, &needs);
            debug_assert_eq!(input_grads.len(), node.inputs.len(), "{}", func.name());
            for ((&i, g), need) in node.inputs.iter().zip(input_grads).zip(needs) {
                let Some(g) = g else { continue };
                if !need {
                    continue;
                }
                debug_assert_eq!(g.shape(), self.nodes[i].value.shape(), "{}", func.name());
                match &mut grads[i] {
                    Some(acc) => acc.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
            }
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.param.map(|p| (p, i)))
            .collect();
        Ok(Gradients { grads, params })
    }
}

/// Gradients of the loss with respect to every leaf reachable from it.
pub struct Gradients<T: Real> {
    grads: Vec<Option<Tensor<T>>>,
    params: Vec<(usize, usize)>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// `(parameter slot, gradient)` pairs, summed when a slot was bound twice.
    /// Parameters unreachable from the loss are absent.
    pub fn params(&self) -> Vec<(usize, Tensor<T>)> {
        let mut out: Vec<(usize, Tensor<T>)> = Vec::new();
        for &(slot, node) in &self.params {
            let Some(g) = &self.grads[node] else { continue };
            match out.iter_mut().find(|(s, _)| *s == slot) {
                Some((_, acc)) => acc.add_assign(g),
                None => out.push((slot, g.clone())),
            }
        }
        out
    }
}
