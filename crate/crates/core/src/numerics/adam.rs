use serde::{Deserialize, Serialize};

use crate::numerics::{Real, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for a list of parameters.
#[derive(Clone, Debug)]
pub struct AdamState<T: Real> {
    pub config: AdamConfig,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Self {
        Self {
            config,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update. A `None` gradient counts as zero.
    /// Non-finite gradients abort the step before anything is modified.
    pub fn step<P: AsMut<Tensor<T>>>(&mut self, params: &mut [P], grads: &[Option<Tensor<T>>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "adam: {} moments, {} params, {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let p = p.as_mut();
            if p.shape() != self.m[i].shape() {
                return Err(Error::Shape(format!("adam: parameter {i} changed shape")));
            }
            if let Some(g) = g {
                if g.shape() != p.shape() {
                    return Err(Error::Shape(format!("adam: gradient {i} shape {:?}", g.shape())));
                }
                if !g.all_finite() {
                    return Err(Error::NonFinite(format!("gradient of parameter {i}")));
                }
            }
        }

        self.t += 1;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - c.beta1), T::lit(1.0 - c.beta2));
        let step = T::lit(c.lr / bc1);
        let inv_bc2 = T::lit(1.0 / bc2);
        let eps = T::lit(c.eps);

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let gd = g.as_ref().map(|g| g.data());
            let p = p.as_mut();
            let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
            for i in 0..pd.len() {
                let gi = gd.map_or(T::zero(), |g| g[i]);
                md[i] = b1 * md[i] + one_b1 * gi;
                vd[i] = b2 * vd[i] + one_b2 * gi * gi;
                pd[i] -= step * md[i] / ((vd[i] * inv_bc2).sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor<f64> {
        Tensor::scalar(v)
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut params = vec![scalar(0.0)];
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        let mut state = AdamState::new(cfg, &params);
        state.step(&mut params, &[Some(scalar(2.0))]).unwrap();
        assert!((params[0].item() + 0.1).abs() < 1e-8);
        assert_eq!(state.steps(), 1);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut params = vec![Tensor::<f64>::from_f64(&[3], &[1.0, -2.0, 0.5]).unwrap()];
        let before = params.clone();
        let mut state = AdamState::new(AdamConfig::default(), &params);
        state.step(&mut params, &[Some(Tensor::zeros(&[3]))]).unwrap();
        state.step(&mut params, &[None]).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.steps(), 2);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut params = vec![scalar(1.0)];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        let mut trace = vec![params[0].item()];
        for _ in 0..2 {
            state.step(&mut params, &[Some(scalar(-0.5))]).unwrap();
            trace.push(params[0].item());
        }
        assert!(trace[0] < trace[1] && trace[1] < trace[2]);
    }

    #[test]
    fn non_finite_gradient_aborts_step() {
        let mut params = vec![scalar(1.0)];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        let err = state.step(&mut params, &[Some(scalar(f64::NAN))]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(params[0].item(), 1.0);
        assert_eq!(state.steps(), 0);
    }
}
