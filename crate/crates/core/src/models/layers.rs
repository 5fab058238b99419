//! Parameterized layers. Each layer stores slot indices into the owning
//! [`ParamStore`]; a forward pass receives the graph variables bound to
//! those slots.

use rand::Rng;

use crate::groupconv::{self, ScaleGrid};
use crate::models::ParamStore;
use crate::numerics::{ops, Graph, Mode, Padding, Real, Tensor, Var};
use crate::{Error, Result};

pub(crate) type Bound = [Option<Var>];

fn bound(p: &Bound, slot: usize) -> Var {
    p[slot].expect("parameter slot bound before forward")
}

/// Fails with the layer name when an activation is NaN or infinite.
pub(crate) fn checked<T: Real>(g: &Graph<T>, v: Var, layer: &str) -> Result<Var> {
    if g.value(v).all_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("activations of {layer}")))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Lift {
    pub name: String,
    weight: usize,
    grid: ScaleGrid,
    padding: Padding,
    /// Kernel size when responses are re-centred.
    centre: Option<usize>,
}

impl Lift {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        rng: &mut impl Rng,
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        grid: ScaleGrid,
        padding: Padding,
        centre: bool,
    ) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), &[c_out, c_in, k], c_in * k, rng);
        Self {
            name: name.to_string(),
            weight,
            grid,
            padding,
            centre: centre.then_some(k),
        }
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let mut y = groupconv::lift(g, x, bound(p, self.weight), self.grid, self.padding)?;
        if let Some(k) = self.centre {
            y = groupconv::centre_scales(g, y, k)?;
        }
        checked(g, y, &self.name)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct GConv {
    pub name: String,
    weight: usize,
    grid: ScaleGrid,
    padding: Padding,
    centre: Option<usize>,
}

impl GConv {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        rng: &mut impl Rng,
        name: &str,
        c_in: usize,
        c_out: usize,
        s_k: usize,
        k: usize,
        grid: ScaleGrid,
        padding: Padding,
        centre: bool,
    ) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), &[c_out, c_in, s_k, k], c_in * s_k * k, rng);
        Self {
            name: name.to_string(),
            weight,
            grid,
            padding,
            centre: centre.then_some(k),
        }
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let mut y = groupconv::group_conv(g, x, bound(p, self.weight), self.grid, self.padding)?;
        if let Some(k) = self.centre {
            y = groupconv::centre_scales(g, y, k)?;
        }
        checked(g, y, &self.name)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Conv {
    pub name: String,
    weight: usize,
    padding: Padding,
    centre: Option<usize>,
}

impl Conv {
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        rng: &mut impl Rng,
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        padding: Padding,
        centre: bool,
    ) -> Self {
        let weight = store.add_uniform(format!("{name}.weight"), &[c_out, c_in, k], c_in * k, rng);
        Self {
            name: name.to_string(),
            weight,
            padding,
            centre: centre.then_some(k),
        }
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let mut y = ops::conv1d(g, x, bound(p, self.weight), self.padding)?;
        if let Some(k) = self.centre {
            y = ops::roll_rows(g, y, &[(k - 1) / 2])?;
        }
        checked(g, y, &self.name)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BatchNorm {
    pub name: String,
    gamma: usize,
    beta: usize,
    mean: usize,
    var: usize,
}

impl BatchNorm {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, channels: usize) -> Self {
        Self {
            name: name.to_string(),
            gamma: store.add_param(format!("{name}.gamma"), Tensor::full(&[channels], T::one())),
            beta: store.add_param(format!("{name}.beta"), Tensor::zeros(&[channels])),
            mean: store.add_buffer(format!("{name}.running_mean"), Tensor::zeros(&[channels])),
            var: store.add_buffer(format!("{name}.running_var"), Tensor::full(&[channels], T::one())),
        }
    }

    pub fn forward<T: Real>(
        &self,
        g: &mut Graph<T>,
        p: &Bound,
        store: &mut ParamStore<T>,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let mut mean = std::mem::replace(store.tensor_mut(self.mean), Tensor::scalar(T::zero()));
        let mut var = std::mem::replace(store.tensor_mut(self.var), Tensor::scalar(T::zero()));
        let y = ops::batch_norm(g, x, bound(p, self.gamma), bound(p, self.beta), &mut mean, &mut var, mode);
        *store.tensor_mut(self.mean) = mean;
        *store.tensor_mut(self.var) = var;
        checked(g, y?, &self.name)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Linear {
    pub name: String,
    weight: usize,
    bias: usize,
}

impl Linear {
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        rng: &mut impl Rng,
        name: &str,
        d_in: usize,
        d_out: usize,
        zero_init: bool,
    ) -> Self {
        let (weight, bias) = if zero_init {
            (
                store.add_param(format!("{name}.weight"), Tensor::zeros(&[d_in, d_out])),
                store.add_param(format!("{name}.bias"), Tensor::zeros(&[d_out])),
            )
        } else {
            (
                store.add_uniform(format!("{name}.weight"), &[d_in, d_out], d_in, rng),
                store.add_uniform(format!("{name}.bias"), &[d_out], d_in, rng),
            )
        };
        Self {
            name: name.to_string(),
            weight,
            bias,
        }
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, x: Var) -> Result<Var> {
        let y = ops::affine(g, x, bound(p, self.weight), bound(p, self.bias))?;
        checked(g, y, &self.name)
    }
}

/// Dense layers with ReLU between them (none after the last).
#[derive(Clone, Debug)]
pub(crate) struct Head {
    layers: Vec<Linear>,
}

impl Head {
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        rng: &mut impl Rng,
        prefix: &str,
        d_in: usize,
        hidden: &[usize],
        d_out: usize,
        zero_init_last: bool,
    ) -> Self {
        let mut layers = Vec::new();
        let mut width = d_in;
        for (i, &h) in hidden.iter().enumerate() {
            layers.push(Linear::new(store, rng, &format!("{prefix}.fc{}", i + 1), width, h, false));
            width = h;
        }
        let last = format!("{prefix}.fc{}", hidden.len() + 1);
        layers.push(Linear::new(store, rng, &last, width, d_out, zero_init_last));
        Self { layers }
    }

    pub fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, mut x: Var) -> Result<Var> {
        let n = self.layers.len();
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.forward(g, p, x)?;
            if i + 1 < n {
                x = ops::relu(g, x);
            }
        }
        Ok(x)
    }
}
