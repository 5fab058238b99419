use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{Real, Tensor};
use crate::{Error, Result};

/// Random resized crop along the position axis followed by an optional flip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationPolicy {
    /// Smallest crop span as a fraction of the window length.
    pub crop_min_fraction: f64,
    pub flip_probability: f64,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self {
            crop_min_fraction: 0.5,
            flip_probability: 0.5,
        }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.crop_min_fraction > 0.0 && self.crop_min_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "crop_min_fraction must be in (0, 1], got {}",
                self.crop_min_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::Config(format!(
                "flip_probability must be in [0, 1], got {}",
                self.flip_probability
            )));
        }
        Ok(())
    }
}

/// Linearly resamples `row[start..start + span]` onto `out.len()` evenly
/// spaced points, the first and last landing on the span's end points.
pub fn resample_span<T: Real>(row: &[T], start: usize, span: usize, out: &mut [T]) {
    let n = out.len();
    if span == 1 || n == 1 {
        out.fill(row[start]);
        return;
    }
    let last = start + span - 1;
    let step = (span - 1) as f64 / (n - 1) as f64;
    for (u, o) in out.iter_mut().enumerate() {
        let pos = start as f64 + u as f64 * step;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        *o = if lo >= last {
            row[last]
        } else if frac == 0.0 {
            row[lo]
        } else {
            let f = T::lit(frac);
            row[lo] * (T::one() - f) + row[lo + 1] * f
        };
    }
}

/// One augmented view of a `[C, L]` window. Every feature row is cropped to
/// the same span.
pub fn augment<T: Real>(window: &Tensor<T>, policy: &AugmentationPolicy, rng: &mut impl Rng) -> Tensor<T> {
    let (c, l) = (window.dim(0), window.dim(1));
    let min_span = ((policy.crop_min_fraction * l as f64).ceil() as usize).clamp(1, l);
    let span = rng.random_range(min_span..=l);
    let start = rng.random_range(0..=l - span);
    let flip = rng.random_bool(policy.flip_probability);

    let mut out = window.clone();
    for (src, dst) in window.data().chunks(l).zip(out.data_mut().chunks_mut(l)).take(c) {
        resample_span(src, start, span, dst);
        if flip {
            dst.reverse();
        }
    }
    out
}
