//! Scale-translation group convolutions on 1D signals.
//!
//! Scales are dyadic (`2^j`, `j < S`) and act on kernels by integer dilation,
//! which makes the lifting layer exactly covariant under nearest-neighbour
//! upsampling by two. Translations are integer shifts along the track;
//! with circular padding every layer commutes with them exactly.

mod equivariance;
mod group;
mod layers;

pub use equivariance::{
    check_equivariance, lift_scale_error, translation_error, translation_error_interior, upsample2,
    LayerProbe, Transform,
};
pub use group::{Dyadic, GroupElement, ScaleGrid};
pub use layers::{
    group_conv, centre_scales, centre_shifts, group_conv_tensor, lift, lift_tensor, project, scale_kernel, GroupKernel,
    LiftingKernel, ProjectMode,
};
