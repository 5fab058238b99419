//! Inner loops shared by plain, lifting and group convolutions.
//!
//! Every convolution in the crate is a cross-correlation with a
//! left-anchored, integer-dilated kernel:
//! `out[u] += w * x[(u + offset) mod L]` (circular) or zero outside `[0, L)`.

use crate::numerics::{Padding, Real};

#[inline]
fn axpy<T: Real>(out: &mut [T], x: &[T], w: T) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += w * v;
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let (ac, bc) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ac.remainder().iter().zip(bc.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ac.zip(bc) {
        for i in 0..8 {
            lanes[i] += x[i] * y[i];
        }
    }
    lanes.iter().copied().sum::<T>() + tail
}

/// Geometry of a scale-indexed convolution.
///
/// Input `[B, Cin, Sin, L]`, weight `[Cout, Cin, Sk, K]`, output
/// `[B, Cout, Sout, L]`. Output scale `j` uses dilation `2^j`. For a lifting
/// convolution (`lifting = true`, `Sin = Sk = 1`) every output scale reads
/// input scale 0; otherwise output scale `j` reads input scales `j + s'`
/// for `s' < Sk`, dropping offsets that fall beyond the top scale.
#[derive(Clone, Copy, Debug)]
pub struct ScaleConv {
    pub batch: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub s_in: usize,
    pub s_out: usize,
    pub s_k: usize,
    pub k: usize,
    pub len: usize,
    pub lifting: bool,
    pub padding: Padding,
}

impl ScaleConv {
    #[inline]
    fn input_scale(&self, j: usize, s: usize) -> Option<usize> {
        if self.lifting {
            Some(0)
        } else if j + s < self.s_in {
            Some(j + s)
        } else {
            None
        }
    }

    #[inline]
    fn x_row(&self, b: usize, c: usize, si: usize) -> usize {
        ((b * self.c_in + c) * self.s_in + si) * self.len
    }

    #[inline]
    fn y_row(&self, b: usize, o: usize, j: usize) -> usize {
        ((b * self.c_out + o) * self.s_out + j) * self.len
    }

    #[inline]
    fn w_at(&self, o: usize, c: usize, s: usize, k: usize) -> usize {
        ((o * self.c_in + c) * self.s_k + s) * self.k + k
    }

    /// Columns per im2col row: every batch element's positions side by side.
    #[inline]
    fn cols(&self) -> usize {
        self.batch * self.len
    }

    /// `col[(c, k)][(b, u)] = x[b, c, si, u + k * dil]`.
    fn im2col<T: Real>(&self, x: &[T], dil: usize, si: usize, col: &mut [T]) {
        let (l, n) = (self.len, self.cols());
        for c in 0..self.c_in {
            for k in 0..self.k {
                let row = &mut col[(c * self.k + k) * n..][..n];
                let off = k * dil;
                for b in 0..self.batch {
                    let xs = &x[self.x_row(b, c, si)..][..l];
                    let dst = &mut row[b * l..][..l];
                    match self.padding {
                        Padding::Circular => {
                            let off = off % l;
                            dst[..l - off].copy_from_slice(&xs[off..]);
                            dst[l - off..].copy_from_slice(&xs[..off]);
                        }
                        Padding::Zero if off < l => {
                            dst[..l - off].copy_from_slice(&xs[off..]);
                            dst[l - off..].fill(T::zero());
                        }
                        Padding::Zero => dst.fill(T::zero()),
                    }
                }
            }
        }
    }

    /// Adjoint of [`Self::im2col`], accumulated into `dx`.
    fn col2im_add<T: Real>(&self, dcol: &[T], dil: usize, si: usize, dx: &mut [T]) {
        let (l, n) = (self.len, self.cols());
        for c in 0..self.c_in {
            for k in 0..self.k {
                let row = &dcol[(c * self.k + k) * n..][..n];
                let off = k * dil;
                for b in 0..self.batch {
                    let xr = self.x_row(b, c, si);
                    let dxs = &mut dx[xr..xr + l];
                    let src = &row[b * l..][..l];
                    match self.padding {
                        Padding::Circular => {
                            let off = off % l;
                            axpy(&mut dxs[off..], &src[..l - off], T::one());
                            axpy(&mut dxs[..off], &src[l - off..], T::one());
                        }
                        Padding::Zero if off < l => axpy(&mut dxs[off..], &src[..l - off], T::one()),
                        Padding::Zero => {}
                    }
                }
            }
        }
    }

    /// Weight slice for scale offset `s` as a `[Cout, Cin * K]` matrix.
    fn weight_matrix<T: Real>(&self, w: &[T], s: usize) -> Vec<T> {
        let ck = self.c_in * self.k;
        let mut a = vec![T::zero(); self.c_out * ck];
        for o in 0..self.c_out {
            for c in 0..self.c_in {
                let src = &w[self.w_at(o, c, s, 0)..][..self.k];
                a[o * ck + c * self.k..][..self.k].copy_from_slice(src);
            }
        }
        a
    }

    pub fn forward<T: Real>(&self, x: &[T], w: &[T]) -> Vec<T> {
        let (l, n, ck) = (self.len, self.cols(), self.c_in * self.k);
        let mut y = vec![T::zero(); self.batch * self.c_out * self.s_out * l];
        let mut col = vec![T::zero(); ck * n];
        let mut acc = vec![T::zero(); self.c_out * n];
        let mats: Vec<Vec<T>> = (0..self.s_k).map(|s| self.weight_matrix(w, s)).collect();
        for j in 0..self.s_out {
            acc.fill(T::zero());
            for (s, a) in mats.iter().enumerate() {
                let Some(si) = self.input_scale(j, s) else { continue };
                self.im2col(x, 1 << j, si, &mut col);
                gemm_acc(&mut acc, a, &col, self.c_out, ck, n);
            }
            for b in 0..self.batch {
                for o in 0..self.c_out {
                    y[self.y_row(b, o, j)..][..l].copy_from_slice(&acc[o * n + b * l..][..l]);
                }
            }
        }
        y
    }

    /// `dY` for output scale `j` as a `[Cout, B * L]` matrix.
    fn gather_dy<T: Real>(&self, dy: &[T], j: usize, out: &mut [T]) {
        let (l, n) = (self.len, self.cols());
        for b in 0..self.batch {
            for o in 0..self.c_out {
                out[o * n + b * l..][..l].copy_from_slice(&dy[self.y_row(b, o, j)..][..l]);
            }
        }
    }

    pub fn backward_input<T: Real>(&self, dy: &[T], w: &[T]) -> Vec<T> {
        let (n, ck) = (self.cols(), self.c_in * self.k);
        let mut dx = vec![T::zero(); self.batch * self.c_in * self.s_in * self.len];
        let mut g = vec![T::zero(); self.c_out * n];
        let mut dcol = vec![T::zero(); ck * n];
        let mats_t: Vec<Vec<T>> = (0..self.s_k)
            .map(|s| transpose(&self.weight_matrix(w, s), self.c_out, ck))
            .collect();
        for j in 0..self.s_out {
            self.gather_dy(dy, j, &mut g);
            for (s, at) in mats_t.iter().enumerate() {
                let Some(si) = self.input_scale(j, s) else { continue };
                dcol.fill(T::zero());
                gemm_acc(&mut dcol, at, &g, ck, self.c_out, n);
                self.col2im_add(&dcol, 1 << j, si, &mut dx);
            }
        }
        dx
    }

    pub fn backward_weight<T: Real>(&self, dy: &[T], x: &[T]) -> Vec<T> {
        let (n, ck) = (self.cols(), self.c_in * self.k);
        let mut dw = vec![T::zero(); self.c_out * self.c_in * self.s_k * self.k];
        let mut g = vec![T::zero(); self.c_out * n];
        let mut col = vec![T::zero(); ck * n];
        for j in 0..self.s_out {
            self.gather_dy(dy, j, &mut g);
            for s in 0..self.s_k {
                let Some(si) = self.input_scale(j, s) else { continue };
                self.im2col(x, 1 << j, si, &mut col);
                for o in 0..self.c_out {
                    let go = &g[o * n..][..n];
                    for c in 0..self.c_in {
                        for k in 0..self.k {
                            dw[self.w_at(o, c, s, k)] += dot(go, &col[(c * self.k + k) * n..][..n]);
                        }
                    }
                }
            }
        }
        dw
    }
}

fn transpose<T: Real>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut t = vec![T::zero(); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

const MR: usize = 4;
const NR: usize = 8;

/// `out[M, N] += a[M, Kd] * b[Kd, N]`, row-major. Full `MR x NR` blocks are
/// accumulated in registers; ragged edges fall back to row-wise updates.
fn gemm_acc<T: Real>(out: &mut [T], a: &[T], b: &[T], m: usize, kd: usize, n: usize) {
    let m_full = m - m % MR;
    let n_full = n - n % NR;
    for i in (0..m_full).step_by(MR) {
        for c in (0..n_full).step_by(NR) {
            let mut acc = [[T::zero(); NR]; MR];
            for (r, row) in acc.iter_mut().enumerate() {
                row.copy_from_slice(&out[(i + r) * n + c..][..NR]);
            }
            for p in 0..kd {
                let bv: &[T; NR] = b[p * n + c..][..NR].try_into().unwrap();
                for (r, row) in acc.iter_mut().enumerate() {
                    let av = a[(i + r) * kd + p];
                    for q in 0..NR {
                        row[q] += av * bv[q];
                    }
                }
            }
            for (r, row) in acc.iter().enumerate() {
                out[(i + r) * n + c..][..NR].copy_from_slice(row);
            }
        }
        if n_full < n {
            for r in i..i + MR {
                for p in 0..kd {
                    axpy(&mut out[r * n + n_full..(r + 1) * n], &b[p * n + n_full..(p + 1) * n], a[r * kd + p]);
                }
            }
        }
    }
    for r in m_full..m {
        for p in 0..kd {
            axpy(&mut out[r * n..(r + 1) * n], &b[p * n..(p + 1) * n], a[r * kd + p]);
        }
    }
}
