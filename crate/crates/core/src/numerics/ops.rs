//! Differentiable operations recorded on a [`Graph`].

use crate::numerics::kernels::ScaleConv;
use crate::numerics::{BackwardFn, Graph, Mode, Padding, Real, Tensor, Var};
use crate::{Error, Result};

/// Running-statistics momentum for batch normalization.
pub const BN_MOMENTUM: f64 = 0.1;
/// Variance floor for batch normalization.
pub const BN_EPS: f64 = 1e-5;

fn same_shape<T: Real>(g: &Graph<T>, a: Var, b: Var, op: &str) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(Error::Shape(format!(
            "{op}: {:?} vs {:?}",
            g.shape(a),
            g.shape(b)
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- elementwise

struct AddFn;

impl<T: Real> BackwardFn<T> for AddFn {
    fn name(&self) -> &'static str {
        "add"
    }

    fn backward(&self, grad: &Tensor<T>, _: &[&Tensor<T>], _: &Tensor<T>, needs: &[bool]) -> Vec<Option<Tensor<T>>> {
        needs.iter().map(|&n| n.then(|| grad.clone())).collect()
    }
}

pub fn add<T: Real>(g: &mut Graph<T>, a: Var, b: Var) -> Result<Var> {
    same_shape(g, a, b, "add")?;
    let mut out = g.value(a).clone();
    out.add_assign(g.value(b));
    Ok(g.apply(&[a, b], out, Box::new(AddFn)))
}

struct MulFn;

impl<T: Real> BackwardFn<T> for MulFn {
    fn name(&self) -> &'static str {
        "mul"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, needs: &[bool]) -> Vec<Option<Tensor<T>>> {
        let prod = |other: &Tensor<T>| {
            let mut out = grad.clone();
            for (o, &v) in out.data_mut().iter_mut().zip(other.data()) {
                *o *= v;
            }
            out
        };
        vec![
            needs[0].then(|| prod(inputs[1])),
            needs[1].then(|| prod(inputs[0])),
        ]
    }
}

pub fn mul<T: Real>(g: &mut Graph<T>, a: Var, b: Var) -> Result<Var> {
    same_shape(g, a, b, "mul")?;
    let mut out = g.value(a).clone();
    for (o, &v) in out.data_mut().iter_mut().zip(g.value(b).data()) {
        *o *= v;
    }
    Ok(g.apply(&[a, b], out, Box::new(MulFn)))
}

struct ScaleFn<T>(T);

impl<T: Real> BackwardFn<T> for ScaleFn<T> {
    fn name(&self) -> &'static str {
        "scale"
    }

    fn backward(&self, grad: &Tensor<T>, _: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let c = self.0;
        vec![Some(grad.map(|v| v * c))]
    }
}

pub fn scale<T: Real>(g: &mut Graph<T>, a: Var, c: T) -> Var {
    let out = g.value(a).map(|v| v * c);
    g.apply(&[a], out, Box::new(ScaleFn(c)))
}

struct SumFn;

impl<T: Real> BackwardFn<T> for SumFn {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        vec![Some(Tensor::full(inputs[0].shape(), grad.item()))]
    }
}

/// Sum of every element, as a one-element tensor.
pub fn sum<T: Real>(g: &mut Graph<T>, a: Var) -> Var {
    let out = Tensor::scalar(g.value(a).sum());
    g.apply(&[a], out, Box::new(SumFn))
}

struct ReluFn;

impl<T: Real> BackwardFn<T> for ReluFn {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let mut out = grad.clone();
        for (o, &x) in out.data_mut().iter_mut().zip(inputs[0].data()) {
            if x <= T::zero() {
                *o = T::zero();
            }
        }
        vec![Some(out)]
    }
}

/// `max(0, x)`; the subgradient at 0 is 0.
pub fn relu<T: Real>(g: &mut Graph<T>, a: Var) -> Var {
    let out = g.value(a).map(|v| if v > T::zero() { v } else { T::zero() });
    g.apply(&[a], out, Box::new(ReluFn))
}

struct ReshapeFn;

impl<T: Real> BackwardFn<T> for ReshapeFn {
    fn name(&self) -> &'static str {
        "reshape"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let g = Tensor::new(inputs[0].shape(), grad.data().to_vec()).expect("same element count");
        vec![Some(g)]
    }
}

pub fn reshape<T: Real>(g: &mut Graph<T>, a: Var, shape: &[usize]) -> Result<Var> {
    let out = g.value(a).reshape(shape)?;
    Ok(g.apply(&[a], out, Box::new(ReshapeFn)))
}

/// Collapses every axis after the first: `[B, ...] -> [B, prod(...)]`.
pub fn flatten<T: Real>(g: &mut Graph<T>, a: Var) -> Result<Var> {
    let shape = g.shape(a);
    let batch = shape[0];
    let rest: usize = shape[1..].iter().product();
    reshape(g, a, &[batch, rest])
}

struct RollRowsFn {
    shifts: Vec<usize>,
}

impl<T: Real> BackwardFn<T> for RollRowsFn {
    fn name(&self) -> &'static str {
        "roll_rows"
    }

    fn backward(&self, grad: &Tensor<T>, _: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let len = grad.dim(grad.rank() - 1);
        let mut dx = Tensor::zeros(grad.shape());
        for (r, (src, dst)) in grad.data().chunks(len).zip(dx.data_mut().chunks_mut(len)).enumerate() {
            let t = self.shifts[r % self.shifts.len()] % len;
            for u in 0..len {
                dst[u] = src[(u + t) % len];
            }
        }
        vec![Some(dx)]
    }
}

/// Circularly shifts each row along the last axis: row `r` moves right by
/// `shifts[r % shifts.len()]`, so `out[(u + t) mod L] = x[u]`.
pub fn roll_rows<T: Real>(g: &mut Graph<T>, a: Var, shifts: &[usize]) -> Result<Var> {
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("roll_rows needs at least one shift".into()));
    }
    let x = g.value(a);
    let len = x.dim(x.rank() - 1);
    let mut out = x.clone();
    for (r, (src, dst)) in x.data().chunks(len).zip(out.data_mut().chunks_mut(len)).enumerate() {
        let t = shifts[r % shifts.len()] % len;
        for u in 0..len {
            dst[(u + t) % len] = src[u];
        }
    }
    let func = RollRowsFn {
        shifts: shifts.to_vec(),
    };
    Ok(g.apply(&[a], out, Box::new(func)))
}

// ----------------------------------------------------------------- reductions

/// `(outer, axis, inner)` sizes around `axis`.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn reduced_shape(shape: &[usize], axis: usize) -> Vec<usize> {
    let mut out: Vec<usize> = shape
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, &d)| d)
        .collect();
    if out.is_empty() {
        out.push(1);
    }
    out
}

struct MaxAxisFn {
    argmax: Vec<usize>,
}

impl<T: Real> BackwardFn<T> for MaxAxisFn {
    fn name(&self) -> &'static str {
        "max_axis"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let mut dx = Tensor::zeros(inputs[0].shape());
        let d = dx.data_mut();
        for (&src, &gv) in self.argmax.iter().zip(grad.data()) {
            d[src] += gv;
        }
        vec![Some(dx)]
    }
}

/// Maximum over `axis`, removing it. Backward routes each gradient to the
/// first maximal element.
pub fn max_axis<T: Real>(g: &mut Graph<T>, a: Var, axis: usize) -> Result<Var> {
    let x = g.value(a);
    if axis >= x.rank() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for shape {:?}",
            x.shape()
        )));
    }
    let (outer, n, inner) = split_axis(x.shape(), axis);
    let data = x.data();
    let mut vals = Vec::with_capacity(outer * inner);
    let mut argmax = Vec::with_capacity(outer * inner);
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut best = base;
            for k in 1..n {
                let at = base + k * inner;
                if data[at] > data[best] {
                    best = at;
                }
            }
            vals.push(data[best]);
            argmax.push(best);
        }
    }
    let out = Tensor::new(&reduced_shape(x.shape(), axis), vals)?;
    Ok(g.apply(&[a], out, Box::new(MaxAxisFn { argmax })))
}

struct MeanAxisFn {
    axis: usize,
}

impl<T: Real> BackwardFn<T> for MeanAxisFn {
    fn name(&self) -> &'static str {
        "mean_axis"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let (outer, n, inner) = split_axis(inputs[0].shape(), self.axis);
        let inv = T::one() / T::lit(n as f64);
        let mut dx = Tensor::zeros(inputs[0].shape());
        let d = dx.data_mut();
        let gd = grad.data();
        for o in 0..outer {
            for k in 0..n {
                for i in 0..inner {
                    d[(o * n + k) * inner + i] = gd[o * inner + i] * inv;
                }
            }
        }
        vec![Some(dx)]
    }
}

/// Arithmetic mean over `axis`, removing it.
pub fn mean_axis<T: Real>(g: &mut Graph<T>, a: Var, axis: usize) -> Result<Var> {
    let x = g.value(a);
    if axis >= x.rank() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for shape {:?}",
            x.shape()
        )));
    }
    let (outer, n, inner) = split_axis(x.shape(), axis);
    let data = x.data();
    let inv = T::one() / T::lit(n as f64);
    let mut vals = vec![T::zero(); outer * inner];
    for o in 0..outer {
        for k in 0..n {
            for i in 0..inner {
                vals[o * inner + i] += data[(o * n + k) * inner + i];
            }
        }
    }
    for v in &mut vals {
        *v *= inv;
    }
    let out = Tensor::new(&reduced_shape(x.shape(), axis), vals)?;
    Ok(g.apply(&[a], out, Box::new(MeanAxisFn { axis })))
}

// --------------------------------------------------------------- convolutions

struct ScaleConvFn {
    spec: ScaleConv,
}

impl<T: Real> BackwardFn<T> for ScaleConvFn {
    fn name(&self) -> &'static str {
        "scale_conv"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, needs: &[bool]) -> Vec<Option<Tensor<T>>> {
        let (x, w) = (inputs[0], inputs[1]);
        let dx = needs[0].then(|| {
            let d = self.spec.backward_input(grad.data(), w.data());
            Tensor::new(x.shape(), d).expect("input shape")
        });
        let dw = needs[1].then(|| {
            let d = self.spec.backward_weight(grad.data(), x.data());
            Tensor::new(w.shape(), d).expect("weight shape")
        });
        vec![dx, dw]
    }
}

/// Records a [`ScaleConv`] whose input and weight shapes were validated by
/// the caller. The output is `[B, Cout, Sout, L]`, or `[B, Cout, L]` when
/// `squeeze_scale` is set (plain convolution).
pub(crate) fn scale_conv<T: Real>(
    g: &mut Graph<T>,
    x: Var,
    w: Var,
    spec: ScaleConv,
    squeeze_scale: bool,
) -> Var {
    let y = spec.forward(g.value(x).data(), g.value(w).data());
    let shape: Vec<usize> = if squeeze_scale {
        vec![spec.batch, spec.c_out, spec.len]
    } else {
        vec![spec.batch, spec.c_out, spec.s_out, spec.len]
    };
    let out = Tensor::new(&shape, y).expect("conv output shape");
    g.apply(&[x, w], out, Box::new(ScaleConvFn { spec }))
}

/// Same-length cross-correlation `y[b,o,u] = sum_{c,k} w[o,c,k] x[b,c,u+k]`
/// with circular wrap or zeros outside `[0, L)`.
pub fn conv1d<T: Real>(g: &mut Graph<T>, x: Var, w: Var, padding: Padding) -> Result<Var> {
    let (xs, ws) = (g.shape(x), g.shape(w));
    if xs.len() != 3 || ws.len() != 3 {
        return Err(Error::Shape(format!("conv1d expects [B,Cin,L] and [Cout,Cin,K], got {xs:?} and {ws:?}")));
    }
    if xs[1] != ws[1] {
        return Err(Error::Shape(format!("conv1d: input has {} channels, kernel expects {}", xs[1], ws[1])));
    }
    if ws[2] > xs[2] {
        return Err(Error::Shape(format!("conv1d: kernel size {} exceeds length {}", ws[2], xs[2])));
    }
    let spec = ScaleConv {
        batch: xs[0],
        c_in: xs[1],
        c_out: ws[0],
        s_in: 1,
        s_out: 1,
        s_k: 1,
        k: ws[2],
        len: xs[2],
        lifting: false,
        padding,
    };
    Ok(scale_conv(g, x, w, spec, true))
}

// --------------------------------------------------------------------- dense

struct AffineFn;

impl<T: Real> BackwardFn<T> for AffineFn {
    fn name(&self) -> &'static str {
        "affine"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, needs: &[bool]) -> Vec<Option<Tensor<T>>> {
        let (x, w) = (inputs[0], inputs[1]);
        let (batch, d_in) = (x.dim(0), x.dim(1));
        let d_out = w.dim(1);
        let (xd, wd, gd) = (x.data(), w.data(), grad.data());

        let dx = needs[0].then(|| {
            let mut dx = vec![T::zero(); batch * d_in];
            for b in 0..batch {
                let grow = &gd[b * d_out..(b + 1) * d_out];
                for d in 0..d_in {
                    let wrow = &wd[d * d_out..(d + 1) * d_out];
                    let mut acc = T::zero();
                    for (&wv, &gv) in wrow.iter().zip(grow) {
                        acc += wv * gv;
                    }
                    dx[b * d_in + d] = acc;
                }
            }
            Tensor::new(x.shape(), dx).expect("x shape")
        });
        let dw = needs[1].then(|| {
            let mut dw = vec![T::zero(); d_in * d_out];
            for b in 0..batch {
                let grow = &gd[b * d_out..(b + 1) * d_out];
                for d in 0..d_in {
                    let xv = xd[b * d_in + d];
                    if xv == T::zero() {
                        continue;
                    }
                    for (o, &gv) in dw[d * d_out..(d + 1) * d_out].iter_mut().zip(grow) {
                        *o += xv * gv;
                    }
                }
            }
            Tensor::new(w.shape(), dw).expect("w shape")
        });
        let db = needs[2].then(|| {
            let mut db = vec![T::zero(); d_out];
            for row in gd.chunks(d_out) {
                for (o, &gv) in db.iter_mut().zip(row) {
                    *o += gv;
                }
            }
            Tensor::new(&[d_out], db).expect("b shape")
        });
        vec![dx, dw, db]
    }
}

/// `y = x W + b` for `x: [B, D]`, `W: [D, E]`, `b: [E]`.
pub fn affine<T: Real>(g: &mut Graph<T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let (xs, ws, bs) = (g.shape(x), g.shape(w), g.shape(b));
    if xs.len() != 2 || ws.len() != 2 || bs.len() != 1 || xs[1] != ws[0] || ws[1] != bs[0] {
        return Err(Error::Shape(format!("affine: x {xs:?}, W {ws:?}, b {bs:?}")));
    }
    let (batch, d_in, d_out) = (xs[0], xs[1], ws[1]);
    let (xd, wd, bd) = (g.value(x).data(), g.value(w).data(), g.value(b).data());
    let mut y = Vec::with_capacity(batch * d_out);
    for row in xd.chunks(d_in) {
        let mut out = bd.to_vec();
        for (d, &xv) in row.iter().enumerate() {
            if xv == T::zero() {
                continue;
            }
            for (o, &wv) in out.iter_mut().zip(&wd[d * d_out..(d + 1) * d_out]) {
                *o += xv * wv;
            }
        }
        y.extend(out);
    }
    let out = Tensor::new(&[batch, d_out], y)?;
    Ok(g.apply(&[x, w, b], out, Box::new(AffineFn)))
}

// --------------------------------------------------------- batch normalization

struct BatchNormFn<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    train: bool,
    dims: (usize, usize, usize),
}

impl<T: Real> BackwardFn<T> for BatchNormFn<T> {
    fn name(&self) -> &'static str {
        "batch_norm"
    }

    fn backward(&self, grad: &Tensor<T>, inputs: &[&Tensor<T>], _: &Tensor<T>, needs: &[bool]) -> Vec<Option<Tensor<T>>> {
        let (outer, channels, inner) = self.dims;
        let gamma = inputs[1].data();
        let gd = grad.data();
        let m = T::lit((outer * inner) as f64);

        let mut sum_dy = vec![T::zero(); channels];
        let mut sum_dy_xhat = vec![T::zero(); channels];
        for o in 0..outer {
            for c in 0..channels {
                let base = (o * channels + c) * inner;
                for i in base..base + inner {
                    sum_dy[c] += gd[i];
                    sum_dy_xhat[c] += gd[i] * self.xhat[i];
                }
            }
        }

        let dx = needs[0].then(|| {
            let mut dx = vec![T::zero(); gd.len()];
            for o in 0..outer {
                for c in 0..channels {
                    let base = (o * channels + c) * inner;
                    let scale = gamma[c] * self.inv_std[c];
                    for i in base..base + inner {
                        dx[i] = if self.train {
                            scale * (gd[i] - (sum_dy[c] + self.xhat[i] * sum_dy_xhat[c]) / m)
                        } else {
                            scale * gd[i]
                        };
                    }
                }
            }
            Tensor::new(inputs[0].shape(), dx).expect("x shape")
        });
        let dgamma = needs[1].then(|| Tensor::new(&[channels], sum_dy_xhat.clone()).expect("gamma"));
        let dbeta = needs[2].then(|| Tensor::new(&[channels], sum_dy.clone()).expect("beta"));
        vec![dx, dgamma, dbeta]
    }
}

/// Batch normalization over every axis except axis 1 (channels).
///
/// In [`Mode::Train`] batch statistics normalize the input and the running
/// estimates are updated with momentum [`BN_MOMENTUM`] (unbiased variance);
/// in [`Mode::Eval`] the running estimates are used.
#[allow(clippy::too_many_arguments)]
pub fn batch_norm<T: Real>(
    g: &mut Graph<T>,
    x: Var,
    gamma: Var,
    beta: Var,
    running_mean: &mut Tensor<T>,
    running_var: &mut Tensor<T>,
    mode: Mode,
) -> Result<Var> {
    let shape = g.shape(x).to_vec();
    if shape.len() < 2 {
        return Err(Error::Shape(format!("batch_norm needs a channel axis, got {shape:?}")));
    }
    let channels = shape[1];
    for (name, t) in [("gamma", g.shape(gamma)), ("beta", g.shape(beta))] {
        if t != [channels] {
            return Err(Error::Shape(format!("batch_norm {name} {t:?}, expected [{channels}]")));
        }
    }
    if running_mean.shape() != [channels] || running_var.shape() != [channels] {
        return Err(Error::Shape("batch_norm running statistics".into()));
    }
    let (outer, _, inner) = split_axis(&shape, 1);
    let eps = T::lit(BN_EPS);
    let xd = g.value(x).data();
    let count = outer * inner;

    let (mean, var) = match mode {
        Mode::Train => {
            if shape[0] == 1 {
                log::warn!("batch_norm in train mode on a batch of size 1");
            }
            let n = T::lit(count as f64);
            let mut mean = vec![T::zero(); channels];
            let mut var = vec![T::zero(); channels];
            for o in 0..outer {
                for (c, m) in mean.iter_mut().enumerate() {
                    let base = (o * channels + c) * inner;
                    *m += xd[base..base + inner].iter().copied().sum::<T>();
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            for o in 0..outer {
                for c in 0..channels {
                    let base = (o * channels + c) * inner;
                    for &v in &xd[base..base + inner] {
                        let d = v - mean[c];
                        var[c] += d * d;
                    }
                }
            }
            for v in &mut var {
                *v /= n;
            }
            let momentum = T::lit(BN_MOMENTUM);
            let unbias = if count > 1 {
                T::lit(count as f64 / (count - 1) as f64)
            } else {
                T::one()
            };
            for c in 0..channels {
                let rm = &mut running_mean.data_mut()[c];
                *rm = (T::one() - momentum) * *rm + momentum * mean[c];
                let rv = &mut running_var.data_mut()[c];
                *rv = (T::one() - momentum) * *rv + momentum * var[c] * unbias;
            }
            (mean, var)
        }
        Mode::Eval => (running_mean.data().to_vec(), running_var.data().to_vec()),
    };

    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let (gd, bd) = (g.value(gamma).data(), g.value(beta).data());
    let mut xhat = vec![T::zero(); xd.len()];
    let mut y = vec![T::zero(); xd.len()];
    for o in 0..outer {
        for c in 0..channels {
            let base = (o * channels + c) * inner;
            for i in base..base + inner {
                xhat[i] = (xd[i] - mean[c]) * inv_std[c];
                y[i] = gd[c] * xhat[i] + bd[c];
            }
        }
    }
    let out = Tensor::new(&shape, y)?;
    let func = BatchNormFn {
        xhat,
        inv_std,
        train: mode == Mode::Train,
        dims: (outer, channels, inner),
    };
    Ok(g.apply(&[x, gamma, beta], out, Box::new(func)))
}

// ----------------------------------------------------------------------- loss

/// Row-wise softmax of a `[B, K]` tensor, stabilized by max subtraction.
pub fn softmax<T: Real>(logits: &Tensor<T>) -> Tensor<T> {
    let k = logits.dim(logits.rank() - 1);
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(k) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

struct SoftmaxXentFn<T> {
    probs: Tensor<T>,
    labels: Vec<usize>,
}

impl<T: Real> BackwardFn<T> for SoftmaxXentFn<T> {
    fn name(&self) -> &'static str {
        "softmax_cross_entropy"
    }

    fn backward(&self, grad: &Tensor<T>, _: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let k = self.probs.dim(1);
        let scale = grad.item() / T::lit(self.labels.len() as f64);
        let mut dx = self.probs.clone();
        for (row, &y) in dx.data_mut().chunks_mut(k).zip(&self.labels) {
            row[y] -= T::one();
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        vec![Some(dx)]
    }
}

/// Mean over the batch of `-log softmax(logits)[label]`.
pub fn softmax_cross_entropy<T: Real>(g: &mut Graph<T>, logits: Var, labels: &[usize]) -> Result<Var> {
    let x = g.value(logits);
    if x.rank() != 2 || x.dim(0) != labels.len() {
        return Err(Error::Shape(format!(
            "cross entropy: logits {:?} with {} labels",
            x.shape(),
            labels.len()
        )));
    }
    let k = x.dim(1);
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range for {k} classes")));
    }
    let probs = softmax(x);
    let mut total = T::zero();
    for (row, &y) in x.data().chunks(k).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
        total += lse - row[y];
    }
    let loss = Tensor::scalar(total / T::lit(labels.len() as f64));
    let func = SoftmaxXentFn {
        probs,
        labels: labels.to_vec(),
    };
    Ok(g.apply(&[logits], loss, Box::new(func)))
}
