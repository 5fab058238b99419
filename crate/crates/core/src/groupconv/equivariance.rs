//! Numerical probes for translation equivariance and dyadic scale covariance.

use crate::groupconv::{group_conv_tensor, lift_tensor, GroupKernel, LiftingKernel, ProjectMode};
use crate::numerics::{Graph, Padding, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// Shift every signal by `t` positions along the last axis.
    Shift(usize),
    /// Nearest-neighbour upsampling by two, `x'[v] = x[v / 2]`.
    DyadicScale,
}

/// A group layer with fixed weights, evaluated in 64-bit precision.
#[derive(Clone, Copy, Debug)]
pub enum LayerProbe<'a> {
    Lift(&'a LiftingKernel<f64>, Padding),
    GroupConv(&'a GroupKernel<f64>, Padding),
    Project(ProjectMode),
}

impl LayerProbe<'_> {
    fn apply(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        match *self {
            LayerProbe::Lift(k, padding) => lift_tensor(x, k, padding),
            LayerProbe::GroupConv(k, padding) => group_conv_tensor(x, k, padding),
            LayerProbe::Project(mode) => {
                let mut g = Graph::new();
                let v = g.input(x.clone());
                let y = crate::groupconv::project(&mut g, v, mode)?;
                Ok(g.value(y).clone())
            }
        }
    }

    fn padding(&self) -> Padding {
        match *self {
            LayerProbe::Lift(_, p) | LayerProbe::GroupConv(_, p) => p,
            LayerProbe::Project(_) => Padding::Circular,
        }
    }

    /// Positions read to the right of each output position at the top scale.
    fn span(&self) -> usize {
        match *self {
            LayerProbe::Lift(k, _) => k.grid.max_support(k.taps()) - 1,
            LayerProbe::GroupConv(k, _) => k.grid.max_support(k.taps()) - 1,
            LayerProbe::Project(_) => 0,
        }
    }
}

/// `max |layer(shift_t x) - shift_t layer(x)|` with circular shifts.
pub fn translation_error<F>(layer: F, x: &Tensor<f64>, t: usize) -> Result<f64>
where
    F: Fn(&Tensor<f64>) -> Result<Tensor<f64>>,
{
    let shifted = layer(&x.roll_last(t))?;
    let expected = layer(x)?.roll_last(t);
    if shifted.shape() != expected.shape() {
        return Err(Error::Shape("layer output shape depends on the shift".into()));
    }
    Ok(shifted.max_abs_diff(&expected))
}

fn shift_zero_fill(x: &Tensor<f64>, t: usize) -> Tensor<f64> {
    let len = *x.shape().last().unwrap();
    let mut out = Tensor::zeros(x.shape());
    for (src, dst) in x.data().chunks(len).zip(out.data_mut().chunks_mut(len)) {
        let t = t.min(len);
        dst[t..].copy_from_slice(&src[..len - t]);
    }
    out
}

/// Translation error for zero-padded layers, comparing only output positions
/// `u` in `[t, L - span)` whose receptive field never meets the boundary.
pub fn translation_error_interior<F>(layer: F, x: &Tensor<f64>, t: usize, span: usize) -> Result<f64>
where
    F: Fn(&Tensor<f64>) -> Result<Tensor<f64>>,
{
    let shifted = layer(&shift_zero_fill(x, t))?;
    let base = layer(x)?;
    let len = *base.shape().last().unwrap();
    let mut err: f64 = 0.0;
    for (ys, yb) in shifted.data().chunks(len).zip(base.data().chunks(len)) {
        for u in t..len.saturating_sub(span) {
            err = err.max((ys[u] - yb[u - t]).abs());
        }
    }
    Ok(err)
}

/// Doubles the last axis by repeating every sample.
pub fn upsample2(x: &Tensor<f64>) -> Tensor<f64> {
    let len = *x.shape().last().unwrap();
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = 2 * len;
    let data = x
        .data()
        .chunks(len)
        .flat_map(|row| row.iter().flat_map(|&v| [v, v]))
        .collect();
    Tensor::new(&shape, data).expect("upsampled shape")
}

/// Scale covariance of a circular lifting layer:
/// `max |lift(up2 x)[b,c,j+1,2u] - lift(x)[b,c,j,u]|` over `j < S - 1`.
pub fn lift_scale_error(kernel: &LiftingKernel<f64>, x: &Tensor<f64>) -> Result<f64> {
    let base = lift_tensor(x, kernel, Padding::Circular)?;
    let scaled = lift_tensor(&upsample2(x), kernel, Padding::Circular)?;
    let (b_n, c_n, s_n, len) = (base.dim(0), base.dim(1), base.dim(2), base.dim(3));
    let mut err: f64 = 0.0;
    for b in 0..b_n {
        for c in 0..c_n {
            for j in 0..s_n.saturating_sub(1) {
                for u in 0..len {
                    let d = scaled.get(&[b, c, j + 1, 2 * u]) - base.get(&[b, c, j, u]);
                    err = err.max(d.abs());
                }
            }
        }
    }
    Ok(err)
}

/// Maximum absolute equivariance error of `layer` at input `x`.
pub fn check_equivariance(layer: LayerProbe<'_>, x: &Tensor<f64>, transform: Transform) -> Result<f64> {
    match transform {
        Transform::Shift(t) => match layer.padding() {
            Padding::Circular => translation_error(|v| layer.apply(v), x, t),
            Padding::Zero => translation_error_interior(|v| layer.apply(v), x, t, layer.span()),
        },
        Transform::DyadicScale => match layer {
            LayerProbe::Lift(k, Padding::Circular) => lift_scale_error(k, x),
            _ => Err(Error::InvalidArgument(
                "dyadic scale covariance is checked for circular lifting layers only".into(),
            )),
        },
    }
}
