use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::AltimetryTrack;
use crate::rng::{self, streams};
use crate::{Error, Result, NUM_FEATURES, WINDOW_LEN};

/// Generator settings for synthetic along-track data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// Number of along-track locations.
    pub length: usize,
    /// Share of windows holding a wave.
    pub positive_fraction: f64,
    /// Signature amplitude range in units of the background noise level.
    pub amplitude: [f64; 2],
    /// Signature width range in locations, before the dyadic factor.
    pub width: [f64; 2],
    /// Widths are multiplied by `2^d` with `d` uniform in `0..dyadic_levels`.
    pub dyadic_levels: u32,
    /// Extra width multiplier; changing it leaves every random draw intact.
    pub width_scale: f64,
    /// Lag-one autocorrelation of the background noise.
    pub noise_autocorrelation: f64,
    /// Locations per satellite pass; the month is constant within a pass.
    pub pass_length: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            length: 32_000,
            positive_fraction: 0.2155,
            amplitude: [2.5, 4.0],
            width: [0.5, 0.8],
            dyadic_levels: 2,
            width_scale: 1.0,
            noise_autocorrelation: 0.8,
            pass_length: 1_600,
            seed: 0,
        }
    }
}

/// Background level and noise scale per feature row (sigma0, MSS, SWH, SLA).
const BASE: [(f64, f64); 4] = [(13.0, 0.4), (0.02, 0.002), (2.0, 0.3), (0.1, 0.05)];
/// Signature polarity per feature row.
const POLARITY: [f64; 4] = [1.0, -1.0, 0.7, -0.8];

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.length < WINDOW_LEN {
            return bad(format!("length must be at least {WINDOW_LEN}, got {}", self.length));
        }
        if !(0.0..1.0).contains(&self.positive_fraction) {
            return bad(format!(
                "positive_fraction {} is infeasible: at most one wave fits per window",
                self.positive_fraction
            ));
        }
        for (name, [lo, hi]) in [("amplitude", self.amplitude), ("width", self.width)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("{name} range [{lo}, {hi}] must be positive and ordered"));
            }
        }
        if self.dyadic_levels == 0 || self.dyadic_levels > 8 {
            return bad(format!("dyadic_levels must be in 1..=8, got {}", self.dyadic_levels));
        }
        if !(self.width_scale > 0.0 && self.width_scale.is_finite()) {
            return bad(format!("width_scale must be positive, got {}", self.width_scale));
        }
        if !(0.0..1.0).contains(&self.noise_autocorrelation) {
            return bad(format!("noise_autocorrelation must be in [0, 1), got {}", self.noise_autocorrelation));
        }
        if self.pass_length == 0 {
            return bad("pass_length must be positive".into());
        }
        Ok(())
    }
}

/// Stationary AR(1) series with unit marginal variance.
fn ar1(n: usize, phi: f64, rng: &mut impl Rng) -> Vec<f64> {
    let innovation = (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut e: f64 = StandardNormal.sample(rng);
    for _ in 0..n {
        out.push(e);
        let z: f64 = StandardNormal.sample(rng);
        e = phi * e + innovation * z;
    }
    out
}

/// Derivative-of-Gaussian profile normalized to peak magnitude 1 at `t = -w`
/// and `t = w`.
fn signature(t: f64, w: f64) -> f64 {
    let r = t / w;
    -r * (0.5 - 0.5 * r * r).exp()
}

/// Generates a track of AR(1) backgrounds with injected wave signatures.
/// Exactly `round(positive_fraction * windows)` windows receive one wave.
pub fn synthesize(cfg: &SyntheticConfig) -> Result<AltimetryTrack> {
    cfg.validate()?;
    let n = cfg.length;
    let windows = n / WINDOW_LEN;
    let mut rng = rng::stream(cfg.seed, streams::SYNTH);

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(NUM_FEATURES);
    for &(level, scale) in &BASE {
        rows.push(ar1(n, cfg.noise_autocorrelation, &mut rng).iter().map(|e| level + scale * e).collect());
    }
    let passes = n.div_ceil(cfg.pass_length);
    let months: Vec<f64> = (0..passes).map(|_| rng.random_range(1..=12) as f64).collect();
    rows.push((0..n).map(|i| months[i / cfg.pass_length]).collect());
    rows.push(ar1(n, 0.98, &mut rng).iter().map(|e| (7.0 + 2.0 * e).max(0.0)).collect());

    let count = (cfg.positive_fraction * windows as f64).round() as usize;
    let mut order: Vec<usize> = (0..windows).collect();
    order.shuffle(&mut rng);
    let mut chosen = order[..count].to_vec();
    chosen.sort_unstable();

    let mut labels = vec![0u8; n];
    for &w in &chosen {
        let offset = rng.random_range(0..WINDOW_LEN);
        let amplitude = rng.random_range(cfg.amplitude[0]..=cfg.amplitude[1]);
        let base_width = rng.random_range(cfg.width[0]..=cfg.width[1]);
        let level = rng.random_range(0..cfg.dyadic_levels);
        let width = base_width * f64::from(1u32 << level) * cfg.width_scale;

        let centre = w * WINDOW_LEN + offset;
        labels[centre] = 1;
        let reach = (4.0 * width).ceil() as usize;
        let (lo, hi) = (centre.saturating_sub(reach), (centre + reach).min(n - 1));
        for (row, (&(_, scale), &sign)) in rows.iter_mut().zip(BASE.iter().zip(&POLARITY)) {
            for (i, v) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *v += amplitude * sign * scale * signature(i as f64 - centre as f64, width);
            }
        }
    }
    AltimetryTrack::new(rows.concat(), labels)
}
