//! Central-difference gradient verification in 64-bit precision.

use crate::numerics::{Graph, Tensor, Var};
use crate::{Error, Result};

fn scalar_loss(g: &Graph<f64>, loss: Var) -> Result<f64> {
    let v = g.value(loss);
    if !v.is_scalar() {
        return Err(Error::InvalidArgument(format!(
            "gradient check needs a scalar function, got shape {:?}",
            v.shape()
        )));
    }
    Ok(v.item())
}

/// Reverse-mode gradient of `f` at `x`.
pub fn analytic_gradient<F>(f: F, x: &Tensor<f64>) -> Result<Tensor<f64>>
where
    F: Fn(&mut Graph<f64>, Var) -> Result<Var>,
{
    let mut g = Graph::new();
    let v = g.leaf(x.clone());
    let loss = f(&mut g, v)?;
    scalar_loss(&g, loss)?;
    let grads = g.backward(loss)?;
    Ok(grads.get(v).cloned().unwrap_or_else(|| Tensor::zeros(x.shape())))
}

/// Central differences `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`.
pub fn numeric_gradient<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<Tensor<f64>>
where
    F: Fn(&mut Graph<f64>, Var) -> Result<Var>,
{
    let eval = |t: Tensor<f64>| -> Result<f64> {
        let mut g = Graph::new();
        let v = g.input(t);
        let loss = f(&mut g, v)?;
        scalar_loss(&g, loss)
    };
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += eps;
        let mut minus = x.clone();
        minus.data_mut()[i] -= eps;
        out.data_mut()[i] = (eval(plus)? - eval(minus)?) / (2.0 * eps);
    }
    Ok(out)
}

/// `max_i |a_i - n_i| / max(1, |a_i|, |n_i|)`.
pub fn max_relative_error(analytic: &Tensor<f64>, numeric: &Tensor<f64>) -> f64 {
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| (a - n).abs() / 1f64.max(a.abs()).max(n.abs()))
        .fold(0.0, f64::max)
}

/// Maximum relative disagreement between the tape gradient of `f` and
/// central differences with step `eps` (1e-5 is the usual choice).
pub fn fd_gradcheck<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph<f64>, Var) -> Result<Var>,
{
    let analytic = analytic_gradient(&f, x)?;
    let numeric = numeric_gradient(&f, x, eps)?;
    Ok(max_relative_error(&analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ops;

    fn sum_of_squares(g: &mut Graph<f64>, x: Var) -> Result<Var> {
        let sq = ops::mul(g, x, x)?;
        Ok(ops::sum(g, sq))
    }

    #[test]
    fn quadratic_passes() {
        let x = Tensor::from_f64(&[3], &[1.0, -2.0, 0.5]).unwrap();
        assert!(fd_gradcheck(sum_of_squares, &x, 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let x = Tensor::from_f64(&[2], &[1.0, 2.0]).unwrap();
        let analytic = analytic_gradient(sum_of_squares, &x).unwrap().map(|v| 2.0 * v);
        let numeric = numeric_gradient(sum_of_squares, &x, 1e-5).unwrap();
        let err = max_relative_error(&analytic, &numeric);
        assert!((err - 0.5).abs() < 1e-6, "{err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let x = Tensor::from_f64(&[2], &[1.0, 2.0]).unwrap();
        let err = fd_gradcheck(
            |g, _| Ok(g.input(Tensor::scalar(3.0))),
            &x,
            1e-5,
        )
        .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn non_scalar_function_rejected() {
        let x = Tensor::from_f64(&[2], &[1.0, 2.0]).unwrap();
        assert!(fd_gradcheck(|_, v| Ok(v), &x, 1e-5).is_err());
    }
}
