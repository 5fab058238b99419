use serde::{Deserialize, Serialize};

use crate::groupconv::ScaleGrid;
use crate::numerics::kernels::ScaleConv;
use crate::numerics::{ops, Graph, Padding, Real, Tensor};
use crate::{Error, Result};

/// Dilates the last axis of `base` by `2^j`: tap `m` moves to `m * 2^j` and
/// the gaps are zero.
pub fn scale_kernel<T: Real>(base: &Tensor<T>, j: usize) -> Tensor<T> {
    let shape = base.shape();
    let k = *shape.last().expect("kernel has a tap axis");
    let dil = 1usize << j;
    let k_out = (k - 1) * dil + 1;
    let mut out_shape = shape.to_vec();
    *out_shape.last_mut().unwrap() = k_out;
    let mut out = Tensor::zeros(&out_shape);
    for (src, dst) in base.data().chunks(k).zip(out.data_mut().chunks_mut(k_out)) {
        for (m, &v) in src.iter().enumerate() {
            dst[m * dil] = v;
        }
    }
    out
}

/// Base kernel `[Cout, Cin, K]` applied at every scale of `grid`.
#[derive(Clone, Debug)]
pub struct LiftingKernel<T: Real> {
    pub weight: Tensor<T>,
    pub grid: ScaleGrid,
}

impl<T: Real> LiftingKernel<T> {
    pub fn new(weight: Tensor<T>, grid: ScaleGrid) -> Result<Self> {
        if weight.rank() != 3 {
            return Err(Error::Shape(format!("lifting kernel must be [Cout,Cin,K], got {:?}", weight.shape())));
        }
        Ok(Self { weight, grid })
    }

    pub fn taps(&self) -> usize {
        self.weight.dim(2)
    }
}

/// Kernel `[Cout, Cin, S_k, K]` over (scale offset, translation).
#[derive(Clone, Debug)]
pub struct GroupKernel<T: Real> {
    pub weight: Tensor<T>,
    pub grid: ScaleGrid,
}

impl<T: Real> GroupKernel<T> {
    pub fn new(weight: Tensor<T>, grid: ScaleGrid) -> Result<Self> {
        if weight.rank() != 4 {
            return Err(Error::Shape(format!(
                "group kernel must be [Cout,Cin,Sk,K], got {:?}",
                weight.shape()
            )));
        }
        if weight.dim(2) > grid.num_scales() {
            return Err(Error::Shape(format!(
                "group kernel spans {} scale offsets but the grid has {}",
                weight.dim(2),
                grid.num_scales()
            )));
        }
        Ok(Self { weight, grid })
    }

    pub fn taps(&self) -> usize {
        self.weight.dim(3)
    }
}

fn check_support(grid: ScaleGrid, k: usize, len: usize, padding: Padding) -> Result<()> {
    if padding == Padding::Circular && grid.max_support(k) > len {
        return Err(Error::Shape(format!(
            "kernel of {k} taps spans {} positions at scale {} but the signal has {len}",
            grid.max_support(k),
            grid.factor(grid.num_scales() - 1)
        )));
    }
    Ok(())
}

/// Lifting convolution: `[B, Cin, L] -> [B, Cout, S, L]`, where scale slice
/// `j` is `conv1d(x, scale_kernel(weight, j))`.
pub fn lift<T: Real>(
    g: &mut Graph<T>,
    x: crate::numerics::Var,
    weight: crate::numerics::Var,
    grid: ScaleGrid,
    padding: Padding,
) -> Result<crate::numerics::Var> {
    let (xs, ws) = (g.shape(x), g.shape(weight));
    if xs.len() != 3 || ws.len() != 3 || xs[1] != ws[1] || ws[2] == 0 {
        return Err(Error::Shape(format!("lift: input {xs:?}, kernel {ws:?}")));
    }
    check_support(grid, ws[2], xs[2], padding)?;
    let spec = ScaleConv {
        batch: xs[0],
        c_in: xs[1],
        c_out: ws[0],
        s_in: 1,
        s_out: grid.num_scales(),
        s_k: 1,
        k: ws[2],
        len: xs[2],
        lifting: true,
        padding,
    };
    Ok(ops::scale_conv(g, x, weight, spec, false))
}

/// Group convolution on the lifted domain: `[B, Cin, S, L] -> [B, Cout, S, L]`.
///
/// `out[b,o,j,u] = sum_{s' < S_k, j+s' < S} sum_c conv1d(f[b,c,j+s'], scale_kernel(w[o,c,s'], j))[u]`;
/// scale offsets past the top of the grid contribute nothing.
pub fn group_conv<T: Real>(
    g: &mut Graph<T>,
    f: crate::numerics::Var,
    weight: crate::numerics::Var,
    grid: ScaleGrid,
    padding: Padding,
) -> Result<crate::numerics::Var> {
    let (fs, ws) = (g.shape(f), g.shape(weight));
    if fs.len() != 4 || ws.len() != 4 || fs[1] != ws[1] {
        return Err(Error::Shape(format!("group_conv: input {fs:?}, kernel {ws:?}")));
    }
    if fs[2] != grid.num_scales() {
        return Err(Error::Shape(format!(
            "group_conv: input has {} scales, grid has {}",
            fs[2],
            grid.num_scales()
        )));
    }
    if ws[2] > grid.num_scales() {
        return Err(Error::Shape(format!(
            "group_conv: kernel spans {} scale offsets, grid has {}",
            ws[2],
            grid.num_scales()
        )));
    }
    check_support(grid, ws[3], fs[3], padding)?;
    let spec = ScaleConv {
        batch: fs[0],
        c_in: fs[1],
        c_out: ws[0],
        s_in: fs[2],
        s_out: fs[2],
        s_k: ws[2],
        k: ws[3],
        len: fs[3],
        lifting: false,
        padding,
    };
    Ok(ops::scale_conv(g, f, weight, spec, false))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectMode {
    #[default]
    Max,
    Mean,
}

/// Per-scale shift that moves a left-anchored response to its kernel centre:
/// `((K - 1) * 2^j) / 2` for scale `j`.
pub fn centre_shifts(kernel_size: usize, num_scales: usize) -> Vec<usize> {
    (0..num_scales).map(|j| ((kernel_size - 1) << j) / 2).collect()
}

/// Rolls every scale slice of `[B, C, S, L]` right by its
/// [`centre_shifts`], so position `u` describes the kernel footprint centred
/// on `u`. A permutation along positions: translation equivariance is kept.
pub fn centre_scales<T: Real>(g: &mut Graph<T>, f: crate::numerics::Var, kernel_size: usize) -> Result<crate::numerics::Var> {
    let shape = g.shape(f);
    if shape.len() != 4 || kernel_size == 0 {
        return Err(Error::Shape(format!("centre_scales expects [B,C,S,L], got {shape:?}")));
    }
    let shifts = centre_shifts(kernel_size, shape[2]);
    ops::roll_rows(g, f, &shifts)
}

/// Reduces the scale axis of `[B, C, S, L]`, keeping position.
pub fn project<T: Real>(g: &mut Graph<T>, f: crate::numerics::Var, mode: ProjectMode) -> Result<crate::numerics::Var> {
    if g.shape(f).len() != 4 {
        return Err(Error::Shape(format!("project expects [B,C,S,L], got {:?}", g.shape(f))));
    }
    match mode {
        ProjectMode::Max => ops::max_axis(g, f, 2),
        ProjectMode::Mean => ops::mean_axis(g, f, 2),
    }
}

/// [`lift`] on plain tensors.
pub fn lift_tensor<T: Real>(x: &Tensor<T>, kernel: &LiftingKernel<T>, padding: Padding) -> Result<Tensor<T>> {
    let mut g = Graph::new();
    let xv = g.input(x.clone());
    let wv = g.input(kernel.weight.clone());
    let y = lift(&mut g, xv, wv, kernel.grid, padding)?;
    Ok(g.value(y).clone())
}

/// [`group_conv`] on plain tensors.
pub fn group_conv_tensor<T: Real>(f: &Tensor<T>, kernel: &GroupKernel<T>, padding: Padding) -> Result<Tensor<T>> {
    let mut g = Graph::new();
    let fv = g.input(f.clone());
    let wv = g.input(kernel.weight.clone());
    let y = group_conv(&mut g, fv, wv, kernel.grid, padding)?;
    Ok(g.value(y).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fd_gradcheck, Var};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(shape, v).unwrap()
    }

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
        Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
    }

    fn grid(s: usize) -> ScaleGrid {
        ScaleGrid::new(s).unwrap()
    }

    /// Direct evaluation of the group-convolution formula, built from
    /// explicitly dilated kernels and modular indexing.
    fn group_conv_oracle(f: &Tensor<f64>, w: &Tensor<f64>, padding: Padding) -> Tensor<f64> {
        let (b_n, c_in, s_n, l) = (f.dim(0), f.dim(1), f.dim(2), f.dim(3));
        let (c_out, s_k) = (w.dim(0), w.dim(2));
        let mut out = Tensor::zeros(&[b_n, c_out, s_n, l]);
        for b in 0..b_n {
            for o in 0..c_out {
                for j in 0..s_n {
                    for s in 0..s_k {
                        if j + s >= s_n {
                            continue;
                        }
                        for c in 0..c_in {
                            let base = Tensor::from_fn(&[w.dim(3)], |k| w.get(&[o, c, s, k]));
                            let dil = scale_kernel(&base, j);
                            for u in 0..l {
                                let mut acc = 0.0;
                                for (k, &wv) in dil.data().iter().enumerate() {
                                    let i = u + k;
                                    let xv = match padding {
                                        Padding::Circular => f.get(&[b, c, j + s, i % l]),
                                        Padding::Zero if i < l => f.get(&[b, c, j + s, i]),
                                        Padding::Zero => 0.0,
                                    };
                                    acc += wv * xv;
                                }
                                let prev = out.get(&[b, o, j, u]);
                                out.set(&[b, o, j, u], prev + acc);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn scale_kernel_examples() {
        let base = t(&[3], &[1.0, 2.0, 3.0]);
        let d = scale_kernel(&base, 1);
        assert_eq!(d.data(), &[1.0, 0.0, 2.0, 0.0, 3.0]);
        assert_eq!(d.sum(), base.sum());
        assert_eq!(scale_kernel(&base, 0), base);
        assert_eq!(scale_kernel(&base, 2).len(), 9);
    }

    #[test]
    fn lift_examples() {
        let x = t(&[1, 1, 4], &[1.0, 0.0, 0.0, 0.0]);
        let k = LiftingKernel::new(t(&[1, 1, 2], &[1.0, 1.0]), grid(2)).unwrap();
        let y = lift_tensor(&x, &k, Padding::Circular).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 4]);
        assert_eq!(&y.data()[..4], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(&y.data()[4..], &[1.0, 0.0, 1.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random(&[2, 3, 16], &mut rng);
        let one_tap = LiftingKernel::new(t(&[1, 1, 1], &[1.0]), grid(3)).unwrap();
        let y = lift_tensor(&x.reshape(&[6, 1, 16]).unwrap(), &one_tap, Padding::Circular).unwrap();
        for j in 0..3 {
            for r in 0..6 {
                for u in 0..16 {
                    assert_eq!(y.get(&[r, 0, j, u]), x.data()[r * 16 + u]);
                }
            }
        }

        let k3 = LiftingKernel::new(random(&[4, 3, 3], &mut rng), grid(3)).unwrap();
        let z = lift_tensor(&Tensor::zeros(&[2, 3, 16]), &k3, Padding::Circular).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lift_slices_equal_conv1d_with_dilated_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random(&[2, 3, 16], &mut rng);
        let w = random(&[4, 3, 3], &mut rng);
        let k = LiftingKernel::new(w.clone(), grid(3)).unwrap();
        for padding in [Padding::Circular, Padding::Zero] {
            let y = lift_tensor(&x, &k, padding).unwrap();
            for j in 0..3 {
                let mut g = Graph::new();
                let xv = g.input(x.clone());
                let wv = g.input(scale_kernel(&w, j));
                let c = ops::conv1d(&mut g, xv, wv, padding).unwrap();
                let c = g.value(c);
                for b in 0..2 {
                    for o in 0..4 {
                        for u in 0..16 {
                            assert!((y.get(&[b, o, j, u]) - c.get(&[b, o, u])).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lift_rejects_support_overflow() {
        let x = Tensor::<f64>::zeros(&[1, 1, 8]);
        let k = LiftingKernel::new(Tensor::zeros(&[1, 1, 3]), grid(3)).unwrap();
        assert!(matches!(lift_tensor(&x, &k, Padding::Circular), Err(Error::Shape(_))));
        assert!(lift_tensor(&x, &k, Padding::Zero).is_ok());
    }

    #[test]
    fn group_conv_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random(&[2, 1, 3, 16], &mut rng);
        let delta = GroupKernel::new(t(&[1, 1, 1, 1], &[1.0]), grid(3)).unwrap();
        assert_eq!(group_conv_tensor(&f, &delta, Padding::Circular).unwrap(), f);

        let ones = Tensor::full(&[1, 1, 3, 16], 1.0);
        let pair = GroupKernel::new(t(&[1, 1, 2, 2], &[1.0, 1.0, 0.0, 0.0]), grid(3)).unwrap();
        let y = group_conv_tensor(&ones, &pair, Padding::Circular).unwrap();
        assert!(y.data().iter().all(|&v| v == 2.0));

        let zero = GroupKernel::new(Tensor::zeros(&[2, 1, 2, 3]), grid(3)).unwrap();
        let y = group_conv_tensor(&f, &zero, Padding::Circular).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));

        assert!(GroupKernel::new(Tensor::<f64>::zeros(&[1, 1, 4, 3]), grid(3)).is_err());
    }

    #[test]
    fn group_conv_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for padding in [Padding::Circular, Padding::Zero] {
            for s_k in 1..=3 {
                let f = random(&[2, 3, 3, 16], &mut rng);
                let w = random(&[4, 3, s_k, 3], &mut rng);
                let k = GroupKernel::new(w.clone(), grid(3)).unwrap();
                let y = group_conv_tensor(&f, &k, padding).unwrap();
                let expect = group_conv_oracle(&f, &w, padding);
                assert!(y.max_abs_diff(&expect) < 1e-12, "{padding:?} s_k={s_k}");
            }
        }
    }

    #[test]
    fn project_examples() {
        let mut g = Graph::new();
        // [B=1, C=1, S=2, L=2] with slices [1,2] and [3,0]
        let f = g.input(t(&[1, 1, 2, 2], &[1.0, 2.0, 3.0, 0.0]));
        let m = project(&mut g, f, ProjectMode::Max).unwrap();
        assert_eq!(g.value(m).data(), &[3.0, 2.0]);
        assert_eq!(g.value(m).shape(), &[1, 1, 2]);
        let a = project(&mut g, f, ProjectMode::Mean).unwrap();
        assert_eq!(g.value(a).data(), &[2.0, 1.0]);

        let single = g.input(t(&[1, 1, 1, 3], &[4.0, -1.0, 2.0]));
        for mode in [ProjectMode::Max, ProjectMode::Mean] {
            let p = project(&mut g, single, mode).unwrap();
            assert_eq!(g.value(p).data(), &[4.0, -1.0, 2.0]);
        }
    }

    fn contract(g: &mut Graph<f64>, y: Var, seed: u64) -> Result<Var> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = g.input(random(g.shape(y), &mut rng));
        let p = ops::mul(g, y, r)?;
        Ok(ops::sum(g, p))
    }

    #[test]
    fn gradcheck_group_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = random(&[2, 3, 16], &mut rng);
        let wl = random(&[4, 3, 3], &mut rng);
        let f = random(&[2, 3, 3, 16], &mut rng);
        let wg = random(&[2, 3, 2, 3], &mut rng);
        for padding in [Padding::Circular, Padding::Zero] {
            let err = fd_gradcheck(
                |g, x| {
                    let w = g.input(wl.clone());
                    let y = lift(g, x, w, grid(3), padding)?;
                    contract(g, y, 1)
                },
                &x,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "lift dx {err}");
            let err = fd_gradcheck(
                |g, w| {
                    let x = g.input(x.clone());
                    let y = lift(g, x, w, grid(3), padding)?;
                    contract(g, y, 1)
                },
                &wl,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "lift dw {err}");
            let err = fd_gradcheck(
                |g, f| {
                    let w = g.input(wg.clone());
                    let y = group_conv(g, f, w, grid(3), padding)?;
                    contract(g, y, 2)
                },
                &f,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "group_conv df {err}");
            let err = fd_gradcheck(
                |g, w| {
                    let f = g.input(f.clone());
                    let y = group_conv(g, f, w, grid(3), padding)?;
                    contract(g, y, 2)
                },
                &wg,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "group_conv dw {err}");
        }
        for mode in [ProjectMode::Max, ProjectMode::Mean] {
            let err = fd_gradcheck(
                |g, f| {
                    let y = project(g, f, mode)?;
                    contract(g, y, 3)
                },
                &f,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "project {mode:?} {err}");
        }
    }
}
