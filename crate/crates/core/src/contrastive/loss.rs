use crate::numerics::{BackwardFn, Graph, Real, Tensor, Var};
use crate::{Error, Result};

const NORM_FLOOR: f64 = 1e-12;

/// Rows scaled to unit Euclidean norm, with the norms used.
pub fn normalize_rows<T: Real>(z: &Tensor<T>) -> (Tensor<T>, Vec<T>) {
    let d = z.dim(z.rank() - 1);
    let mut u = z.clone();
    let mut norms = Vec::with_capacity(z.len() / d);
    for row in u.data_mut().chunks_mut(d) {
        let n = row.iter().map(|&v| v * v).sum::<T>().sqrt().max(T::lit(NORM_FLOOR));
        for v in row.iter_mut() {
            *v /= n;
        }
        norms.push(n);
    }
    (u, norms)
}

fn check(shape: &[usize], tau: f64) -> Result<(usize, usize)> {
    if shape.len() != 2 || !shape[0].is_multiple_of(2) || shape[0] < 4 {
        return Err(Error::InvalidArgument(format!(
            "nt_xent needs [2N, D] embeddings with N >= 2, got {shape:?}"
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {tau}")));
    }
    Ok((shape[0], shape[1]))
}

/// Normalized embeddings, the similarity-gradient matrix `(P - onehot) / 2N`
/// and the loss.
fn forward<T: Real>(z: &Tensor<T>, tau: f64) -> Result<(Tensor<T>, Vec<T>, Vec<T>, T)> {
    let (m, d) = check(z.shape(), tau)?;
    let (u, norms) = normalize_rows(z);
    let inv_tau = T::lit(1.0 / tau);
    let ud = u.data();
    let mut sim = vec![T::zero(); m * m];
    for i in 0..m {
        for k in i..m {
            let s = ud[i * d..(i + 1) * d]
                .iter()
                .zip(&ud[k * d..(k + 1) * d])
                .map(|(&a, &b)| a * b)
                .sum::<T>()
                * inv_tau;
            sim[i * m + k] = s;
            sim[k * m + i] = s;
        }
    }

    let scale = T::lit(1.0 / m as f64);
    let mut total = T::zero();
    let mut dsim = vec![T::zero(); m * m];
    for i in 0..m {
        let row = &sim[i * m..(i + 1) * m];
        let pos = i ^ 1;
        let max = (0..m).filter(|&k| k != i).map(|k| row[k]).fold(T::neg_infinity(), T::max);
        let denom: T = (0..m).filter(|&k| k != i).map(|k| (row[k] - max).exp()).sum();
        let lse = denom.ln() + max;
        total += lse - row[pos];
        let drow = &mut dsim[i * m..(i + 1) * m];
        for k in (0..m).filter(|&k| k != i) {
            drow[k] = (row[k] - lse).exp() * scale;
        }
        drow[pos] -= scale;
    }
    Ok((u, norms, dsim, total * scale))
}

/// NT-Xent loss value; rows `2i` and `2i + 1` are positive pairs.
pub fn nt_xent_value<T: Real>(z: &Tensor<T>, tau: f64) -> Result<T> {
    Ok(forward(z, tau)?.3)
}

struct NtXentFn<T> {
    u: Tensor<T>,
    norms: Vec<T>,
    dsim: Vec<T>,
    tau: f64,
}

impl<T: Real> BackwardFn<T> for NtXentFn<T> {
    fn name(&self) -> &'static str {
        "nt_xent"
    }

    fn backward(&self, grad: &Tensor<T>, _: &[&Tensor<T>], _: &Tensor<T>, _: &[bool]) -> Vec<Option<Tensor<T>>> {
        let (m, d) = (self.u.dim(0), self.u.dim(1));
        let ud = self.u.data();
        let c = grad.item() * T::lit(1.0 / self.tau);
        let mut dz = Tensor::zeros(self.u.shape());
        let out = dz.data_mut();
        for i in 0..m {
            // dU_i = sum_k (G_ik + G_ki) u_k / tau
            let mut du = vec![T::zero(); d];
            for k in 0..m {
                let w = (self.dsim[i * m + k] + self.dsim[k * m + i]) * c;
                for (a, &b) in du.iter_mut().zip(&ud[k * d..(k + 1) * d]) {
                    *a += w * b;
                }
            }
            let ui = &ud[i * d..(i + 1) * d];
            let radial: T = ui.iter().zip(&du).map(|(&a, &b)| a * b).sum();
            for ((o, &g), &uv) in out[i * d..(i + 1) * d].iter_mut().zip(&du).zip(ui) {
                *o = (g - uv * radial) / self.norms[i];
            }
        }
        vec![Some(dz)]
    }
}

/// Mean NT-Xent loss over all `2N` anchors of `z: [2N, D]`, recorded on the
/// tape. Rows are normalized internally.
pub fn nt_xent<T: Real>(g: &mut Graph<T>, z: Var, tau: f64) -> Result<Var> {
    let (u, norms, dsim, loss) = forward(g.value(z), tau)?;
    let func = NtXentFn { u, norms, dsim, tau };
    Ok(g.apply(&[z], Tensor::scalar(loss), Box::new(func)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_gradcheck;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn t(rows: &[[f64; 3]]) -> Tensor<f64> {
        Tensor::from_f64(&[rows.len(), 3], &rows.concat()).unwrap()
    }

    #[test]
    fn identical_embeddings_give_log_three() {
        let z = t(&[[0.3, -1.0, 2.0]; 4]);
        for tau in [0.1, 0.5, 1.0, 7.0] {
            assert!((nt_xent_value(&z, tau).unwrap() - 3f64.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn orthogonal_negatives() {
        let z = t(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.0]]);
        let l1 = nt_xent_value(&z, 1.0).unwrap();
        assert!((l1 - (1.0 + 2.0 * (-1f64).exp()).ln()).abs() < 1e-9);
        let l2 = nt_xent_value(&z, 0.5).unwrap();
        assert!((l2 - (1.0 + 2.0 * (-2f64).exp()).ln()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let z = t(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert!(nt_xent_value(&z, 1.0).is_err());
        let z = t(&[[1.0, 0.0, 0.0]; 4]);
        assert!(nt_xent_value(&z, 0.0).is_err());
        assert!(nt_xent_value(&z, -1.0).is_err());
        let odd = t(&[[1.0, 0.0, 0.0]; 5]);
        assert!(nt_xent_value(&odd, 1.0).is_err());
    }

    #[test]
    fn normalized_rows_have_unit_norm() {
        let mut rng = rng::stream(3, 0);
        let z = Tensor::<f64>::from_fn(&[8, 5], |_| rng.random_range(-3.0..3.0));
        let (u, _) = normalize_rows(&z);
        for row in u.data().chunks(5) {
            let n: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng::stream(4, 0);
        let z = Tensor::<f64>::from_fn(&[6, 4], |_| rng.random_range(-1.0..1.0));
        for tau in [0.1, 0.5, 1.0] {
            let err = fd_gradcheck(|g, v| nt_xent(g, v, tau), &z, 1e-6).unwrap();
            assert!(err < 1e-6, "tau {tau}: {err}");
        }
    }

    fn random_embeddings(n: usize, d: usize, seed: u64) -> Tensor<f64> {
        let mut rng = rng::stream(seed, 0);
        Tensor::from_fn(&[2 * n, d], |_| rng.random_range(-1.0..1.0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn swapping_within_pairs_is_harmless(n in 2usize..6, d in 2usize..6, seed in any::<u64>(), tau in 0.05f64..2.0) {
            let z = random_embeddings(n, d, seed);
            let mut swapped = z.clone();
            for i in 0..n {
                let (a, b) = (2 * i * d, (2 * i + 1) * d);
                for c in 0..d {
                    swapped.data_mut().swap(a + c, b + c);
                }
            }
            let diff = nt_xent_value(&z, tau).unwrap() - nt_xent_value(&swapped, tau).unwrap();
            prop_assert!(diff.abs() <= 1e-12);
        }

        #[test]
        fn common_rotation_is_harmless(n in 2usize..6, seed in any::<u64>(), angle in 0.0f64..6.3, tau in 0.05f64..2.0) {
            let z = random_embeddings(n, 2, seed);
            let (s, c) = angle.sin_cos();
            let mut rotated = z.clone();
            for row in rotated.data_mut().chunks_mut(2) {
                let (x, y) = (row[0], row[1]);
                row[0] = c * x - s * y;
                row[1] = s * x + c * y;
            }
            let diff = nt_xent_value(&z, tau).unwrap() - nt_xent_value(&rotated, tau).unwrap();
            prop_assert!(diff.abs() <= 1e-10);
        }

        #[test]
        fn loss_stays_within_similarity_bounds(n in 2usize..8, d in 1usize..6, seed in any::<u64>(), tau in 0.05f64..2.0) {
            let z = random_embeddings(n, d, seed);
            let loss = nt_xent_value(&z, tau).unwrap();
            let base = ((2 * n - 1) as f64).ln();
            prop_assert!(loss >= base - 2.0 / tau - 1e-9);
            prop_assert!(loss <= base + 2.0 / tau + 1e-9);
        }
    }
}
