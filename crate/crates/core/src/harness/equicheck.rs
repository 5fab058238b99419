use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::groupconv::{check_equivariance, GroupKernel, LayerProbe, LiftingKernel, ProjectMode, ScaleGrid, Transform};
use crate::models::{ModelConfig, Network};
use crate::numerics::{fd_gradcheck, ops, Mode, Padding, Tensor};
use crate::rng;
use crate::{Result, NUM_FEATURES, WINDOW_LEN};

/// Bound on layer-level translation and scale errors.
pub const LAYER_TOLERANCE: f64 = 1e-12;
/// Bound on the relative finite-difference gradient error.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

/// Maximum errors found by [`equicheck`]. Group-layer entries are absent for
/// models without a lifting layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquiCheck {
    pub model: String,
    /// Lifting, group convolution and projection under every circular shift.
    pub translation_error: Option<f64>,
    /// Lifting layer under dyadic upsampling.
    pub scale_error: Option<f64>,
    /// Pre-head feature map of the full model under every circular shift.
    pub feature_map_shift_error: Option<f64>,
    pub gradient_error: f64,
}

impl EquiCheck {
    pub fn passed(&self) -> bool {
        let layer_ok = |e: Option<f64>| e.is_none_or(|e| e <= LAYER_TOLERANCE);
        layer_ok(self.translation_error)
            && layer_ok(self.scale_error)
            && layer_ok(self.feature_map_shift_error)
            && self.gradient_error <= GRADIENT_TOLERANCE
    }
}

fn random(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Group-layer probes with `draws` random kernels, each on `draws` random
/// inputs: (translation error, scale error).
pub fn group_layer_errors(
    grid: ScaleGrid,
    kernel_size: usize,
    scale_offsets: usize,
    channels: usize,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut rng = rng::stream(seed, 0);
    let s = grid.num_scales();
    let (mut shift_err, mut scale_err) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let lift = LiftingKernel::new(random(&[channels, NUM_FEATURES, kernel_size], &mut rng), grid)?;
        let gconv = GroupKernel::new(random(&[channels, channels, scale_offsets, kernel_size], &mut rng), grid)?;
        for _ in 0..draws {
            let x = random(&[2, NUM_FEATURES, WINDOW_LEN], &mut rng);
            let f = random(&[2, channels, s, WINDOW_LEN], &mut rng);
            for t in 0..WINDOW_LEN {
                for (probe, input) in [
                    (LayerProbe::Lift(&lift, Padding::Circular), &x),
                    (LayerProbe::GroupConv(&gconv, Padding::Circular), &f),
                    (LayerProbe::Project(ProjectMode::Max), &f),
                    (LayerProbe::Project(ProjectMode::Mean), &f),
                ] {
                    shift_err = shift_err.max(check_equivariance(probe, input, Transform::Shift(t))?);
                }
            }
            let e = check_equivariance(LayerProbe::Lift(&lift, Padding::Circular), &x, Transform::DyadicScale)?;
            scale_err = scale_err.max(e);
        }
    }
    Ok((shift_err, scale_err))
}

/// Runs the equivariance and gradient checks on a model configuration in
/// 64-bit precision.
pub fn equicheck(config: &ModelConfig, draws: usize, seed: u64) -> Result<EquiCheck> {
    let group = match config {
        ModelConfig::EquiOnedcnn(c) => Some((c.validate()?, c.kernel_size, c.scale_offsets, c.lift_channels)),
        ModelConfig::EquiResnet(c) => Some((c.validate()?, c.kernel_size, c.scale_offsets, c.channels[0])),
        _ => None,
    };
    let (translation_error, scale_error) = match group {
        Some((grid, k, sk, c)) => {
            let (t, s) = group_layer_errors(grid, k, sk, c.min(8), draws.max(1), seed)?;
            (Some(t), Some(s))
        }
        None => (None, None),
    };

    let mut net = Network::<f64>::build(config, seed)?;
    let mut rng = rng::stream(seed, 1);
    let x = random(&[2, NUM_FEATURES, WINDOW_LEN], &mut rng);
    let feature_map_shift_error = match config {
        ModelConfig::Mlp(_) => None,
        _ => {
            let base = net.feature_map(&x)?;
            let mut err = 0.0f64;
            for t in 0..WINDOW_LEN {
                let shifted = net.feature_map(&x.roll_last(t))?;
                err = err.max(shifted.max_abs_diff(&base.roll_last(t)));
            }
            Some(err)
        }
    };

    let net = std::cell::RefCell::new(net);
    let labels = [1, 0];
    let gradient_error = fd_gradcheck(
        |g, xv| {
            let logits = net.borrow_mut().forward(g, xv, Mode::Eval)?;
            ops::softmax_cross_entropy(g, logits, &labels)
        },
        &x,
        1e-6,
    )?;
    Ok(EquiCheck {
        model: config.name().to_string(),
        translation_error,
        scale_error,
        feature_map_shift_error,
        gradient_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{EquiResNetConfig, MlpConfig, OneDcnnConfig};

    #[test]
    fn default_equi_model_passes() {
        let r = equicheck(&ModelConfig::default(), 2, 0).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.translation_error.unwrap() <= 1e-12);
        assert!(r.scale_error.unwrap() <= 1e-12);
    }

    #[test]
    fn other_models() {
        let r = equicheck(&ModelConfig::EquiResnet(EquiResNetConfig::desk()), 1, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = equicheck(&ModelConfig::Onedcnn(OneDcnnConfig::default()), 1, 1).unwrap();
        assert!(r.translation_error.is_none() && r.feature_map_shift_error.unwrap() <= 1e-12, "{r:?}");
        let r = equicheck(&ModelConfig::Mlp(MlpConfig::default()), 1, 1).unwrap();
        assert!(r.feature_map_shift_error.is_none() && r.gradient_error <= GRADIENT_TOLERANCE, "{r:?}");
    }
}
