//! Dense tensors, the reverse-mode tape, and the Adam optimizer.

mod adam;
mod gradcheck;
mod graph;
pub(crate) mod kernels;
pub mod ops;
mod real;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{analytic_gradient, fd_gradcheck, max_relative_error, numeric_gradient};
pub use graph::{BackwardFn, Gradients, Graph, Var};
pub use real::{DType, Real};
pub use tensor::Tensor;

/// Boundary handling for same-length convolutions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    #[default]
    Circular,
    Zero,
}

/// Train mode uses batch statistics in batch normalization and updates the
/// running estimates; eval mode uses the running estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
