//! Scale-translation equivariant 1D convolutional networks for locating
//! internal-solitary-wave signatures in along-track altimetry windows.
//!
//! The crate is layered bottom-up:
//!
//! - [`numerics`]: dense tensors, a reverse-mode tape, Adam, gradient checks.
//! - [`groupconv`]: the scale-translation group, lifting / group convolution /
//!   projection layers and equivariance probes.
//! - [`models`]: EquiOneDCNN, EquiResNet and the OneDCNN / MLP baselines.
//! - [`contrastive`]: window augmentations, NT-Xent and SimCLR-style pre-training.
//! - [`metrics`]: G-mean, MAUC, MMCC and k-approximate accuracy.
//! - [`data`]: CSV ingestion, standardization, windowing, 5x2 splits and a
//!   synthetic track generator.
//! - [`harness`]: training loops, cross-validation, Mann-Whitney U, checkpoints
//!   and the `stecnn` command-line interface.

pub mod contrastive;
pub mod data;
mod error;
pub mod groupconv;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};

/// Number of along-track positions in one window sample.
pub const WINDOW_LEN: usize = 16;
/// Number of altimeter features per position.
pub const NUM_FEATURES: usize = 6;
/// Absence class plus one class per window position.
pub const NUM_CLASSES: usize = WINDOW_LEN + 1;
