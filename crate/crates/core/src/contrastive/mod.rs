//! Contrastive pre-training: window augmentations, the NT-Xent loss,
//! encoder pre-training on unlabeled windows and weight transfer into
//! classifiers.

mod augment;
mod loss;
mod pretrain;

pub use augment::{augment, resample_span, AugmentationPolicy};
pub use loss::{normalize_rows, nt_xent, nt_xent_value};
pub use pretrain::{pretrain, transfer, PretrainConfig, PretrainOutcome};
