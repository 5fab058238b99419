use serde::{Deserialize, Serialize};

use crate::data::{AltimetryTrack, FEATURE_NAMES};
use crate::NUM_FEATURES;

/// Rows whose standard deviation falls below this are treated as constant.
const MIN_STD: f64 = 1e-12;

/// Per-feature mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    /// Statistics of `rows[f]` for every feature `f`, where each entry yields
    /// that feature's values.
    pub fn from_rows<'a, I, R>(rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = &'a f64>,
    {
        let (mut mean, mut std) = (Vec::new(), Vec::new());
        for row in rows {
            let values: Vec<f64> = row.into_iter().copied().collect();
            let n = values.len().max(1) as f64;
            let m = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(var.sqrt());
        }
        Self { mean, std }
    }

    pub fn from_track(track: &AltimetryTrack) -> Self {
        Self::from_rows((0..NUM_FEATURES).map(|f| track.row(f)))
    }

    /// Standardizes one value of feature `f`; constant features map to 0.
    #[inline]
    pub fn apply(&self, f: usize, v: f64) -> f64 {
        if self.std[f] < MIN_STD {
            0.0
        } else {
            (v - self.mean[f]) / self.std[f]
        }
    }

    pub(crate) fn warn_constant(&self) {
        for (f, &s) in self.std.iter().enumerate() {
            if s < MIN_STD {
                log::warn!("feature {} is constant; standardized to zeros", FEATURE_NAMES.get(f).unwrap_or(&"?"));
            }
        }
    }
}

/// `x' = (x - mean) / std` per feature row, using `stats` when given (for
/// held-out data) or the track's own statistics otherwise.
pub fn standardize(track: &AltimetryTrack, stats: Option<&StandardizationStats>) -> (AltimetryTrack, StandardizationStats) {
    let stats = stats.cloned().unwrap_or_else(|| StandardizationStats::from_track(track));
    stats.warn_constant();
    let mut out = track.clone();
    for f in 0..NUM_FEATURES {
        for v in out.row_mut(f) {
            *v = stats.apply(f, *v);
        }
    }
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(rows: [Vec<f64>; 6]) -> AltimetryTrack {
        let n = rows[0].len();
        AltimetryTrack::new(rows.concat(), vec![0; n]).unwrap()
    }

    fn ramp(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|i| a * i as f64 + b).collect()
    }

    #[test]
    fn two_point_row() {
        let s = StandardizationStats::from_rows([[1.0, 3.0].iter()]);
        assert_eq!(s.mean, vec![2.0]);
        assert_eq!(s.std, vec![1.0]);
        assert_eq!(s.apply(0, 1.0), -1.0);
        assert_eq!(s.apply(0, 3.0), 1.0);
    }

    #[test]
    fn result_has_zero_mean_unit_std_and_is_idempotent() {
        let t = track([ramp(32, 0.5, 3.0), ramp(32, -2.0, 1.0), ramp(32, 0.1, 0.0), ramp(32, 3.0, -9.0), vec![7.0; 32], ramp(32, 0.01, 5.0)]);
        let (s, stats) = standardize(&t, None);
        assert_eq!(stats.std[4], 0.0);
        assert!(s.row(4).iter().all(|&v| v == 0.0));
        let again = StandardizationStats::from_track(&s);
        for f in [0, 1, 2, 3, 5] {
            assert!(again.mean[f].abs() < 1e-12);
            assert!((again.std[f] - 1.0).abs() < 1e-12);
        }
        let (twice, _) = standardize(&s, None);
        for f in [0, 1, 2, 3, 5] {
            for (a, b) in twice.row(f).iter().zip(s.row(f)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn supplied_stats_are_used_and_labels_kept() {
        let mut rows: [Vec<f64>; 6] = std::array::from_fn(|f| ramp(16, 1.0, f as f64));
        rows[4] = vec![3.0; 16];
        let n = 16;
        let mut labels = vec![0u8; n];
        labels[5] = 1;
        let t = AltimetryTrack::new(rows.concat(), labels.clone()).unwrap();
        let stats = StandardizationStats {
            mean: vec![1.0; 6],
            std: vec![2.0; 6],
        };
        let (s, used) = standardize(&t, Some(&stats));
        assert_eq!(used, stats);
        assert_eq!(s.row(0)[3], 1.0);
        assert_eq!(s.labels(), &labels[..]);
    }
}
