use crate::data::{AltimetryTrack, StandardizationStats};
use crate::numerics::{Real, Tensor};
use crate::{Error, Result, NUM_CLASSES, NUM_FEATURES, WINDOW_LEN};

const WINDOW_SIZE: usize = NUM_FEATURES * WINDOW_LEN;

/// One `(6 x 16)` window and its class: 0 for no wave, otherwise the 1-based
/// position of the wave inside the window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub x: Tensor<f64>,
    pub y: usize,
}

/// Row-major concatenation of the feature rows.
pub fn flatten(sample: &WindowSample) -> Vec<f64> {
    sample.x.data().to_vec()
}

/// A set of windows stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct Windows {
    x: Vec<f64>,
    labels: Vec<usize>,
}

impl Windows {
    pub fn new(x: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if x.len() != labels.len() * WINDOW_SIZE {
            return Err(Error::Shape(format!("{} values for {} windows", x.len(), labels.len())));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= NUM_CLASSES) {
            return Err(Error::Data(format!("window label {y} out of range")));
        }
        Ok(Self { x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Window `i` as a flat row-major `[6 * 16]` slice.
    pub fn window(&self, i: usize) -> &[f64] {
        &self.x[i * WINDOW_SIZE..(i + 1) * WINDOW_SIZE]
    }

    pub fn sample(&self, i: usize) -> WindowSample {
        WindowSample {
            x: Tensor::new(&[NUM_FEATURES, WINDOW_LEN], self.window(i).to_vec()).expect("window shape"),
            y: self.labels[i],
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: indices.iter().flat_map(|&i| self.window(i).iter().copied()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Windows `indices` as a `[B, 6, 16]` tensor.
    pub fn batch<T: Real>(&self, indices: &[usize]) -> Tensor<T> {
        let data: Vec<T> = indices
            .iter()
            .flat_map(|&i| self.window(i).iter().map(|&v| T::lit(v)))
            .collect();
        Tensor::new(&[indices.len(), NUM_FEATURES, WINDOW_LEN], data).expect("batch shape")
    }

    /// All windows as a `[N, 6, 16]` tensor.
    pub fn to_tensor<T: Real>(&self) -> Tensor<T> {
        self.batch(&(0..self.len()).collect::<Vec<_>>())
    }

    /// Per-feature statistics over every position of the given windows.
    pub fn stats(&self, indices: &[usize]) -> StandardizationStats {
        StandardizationStats::from_rows((0..NUM_FEATURES).map(|f| {
            indices
                .iter()
                .flat_map(move |&i| self.window(i)[f * WINDOW_LEN..(f + 1) * WINDOW_LEN].iter())
        }))
    }

    pub fn standardized(&self, stats: &StandardizationStats) -> Self {
        stats.warn_constant();
        let mut x = self.x.clone();
        for w in x.chunks_mut(WINDOW_SIZE) {
            for (f, row) in w.chunks_mut(WINDOW_LEN).enumerate() {
                for v in row {
                    *v = stats.apply(f, *v);
                }
            }
        }
        Self {
            x,
            labels: self.labels.clone(),
        }
    }
}

/// Non-overlapping windows of 16 locations; trailing locations that do not
/// fill a window are dropped.
pub fn windowize(track: &AltimetryTrack) -> Result<Windows> {
    let count = track.len() / WINDOW_LEN;
    let mut x = Vec::with_capacity(count * WINDOW_SIZE);
    let mut labels = Vec::with_capacity(count);
    for w in 0..count {
        let span = w * WINDOW_LEN..(w + 1) * WINDOW_LEN;
        for f in 0..NUM_FEATURES {
            x.extend_from_slice(&track.row(f)[span.clone()]);
        }
        let positives: Vec<usize> = track.labels()[span]
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == 1)
            .map(|(i, _)| i)
            .collect();
        let label = match positives[..] {
            [] => 0,
            [p] => p + 1,
            _ => {
                return Err(Error::Data(format!(
                    "window {w} (locations {}..{}) has {} positive labels",
                    w * WINDOW_LEN,
                    (w + 1) * WINDOW_LEN,
                    positives.len()
                )))
            }
        };
        labels.push(label);
    }
    Windows::new(x, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::standardize;

    fn track(n: usize, positives: &[usize]) -> AltimetryTrack {
        let features: Vec<f64> = (0..6 * n).map(|i| (i as f64 * 0.37).cos()).collect();
        let mut labels = vec![0u8; n];
        for &p in positives {
            labels[p] = 1;
        }
        AltimetryTrack::new(features, labels).unwrap()
    }

    #[test]
    fn labels_are_one_based_offsets() {
        let w = windowize(&track(32, &[20])).unwrap();
        assert_eq!(w.labels(), &[0, 5]);
        assert_eq!(windowize(&track(48, &[])).unwrap().labels(), &[0, 0, 0]);
        assert_eq!(windowize(&track(40, &[0, 31])).unwrap().labels(), &[1, 16]);
    }

    #[test]
    fn two_positives_in_one_window_fail() {
        let err = windowize(&track(32, &[3, 7])).unwrap_err().to_string();
        assert!(err.contains("window 0"), "{err}");
    }

    #[test]
    fn remainder_is_dropped_and_values_copied() {
        let t = track(37, &[33]);
        let w = windowize(&t).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.window(1)[2 * 16 + 5], t.row(2)[16 + 5]);
    }

    #[test]
    fn flatten_is_row_major() {
        assert_eq!(
            flatten(&WindowSample {
                x: Tensor::zeros(&[6, 16]),
                y: 0
            }),
            vec![0.0; 96]
        );
        let x = Tensor::from_fn(&[6, 16], |i| i as f64);
        let s = WindowSample { x: x.clone(), y: 3 };
        let flat = flatten(&s);
        assert_eq!(flat[37], x.get(&[2, 5]));
        assert!(Tensor::new(&[6, 16], flat).unwrap().bit_eq(&x));
    }

    #[test]
    fn standardizing_never_touches_labels() {
        let t = track(160, &[3, 40, 77, 150]);
        let a = windowize(&standardize(&t, None).0).unwrap();
        let b = windowize(&t).unwrap();
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn window_stats_and_batches() {
        let w = windowize(&track(64, &[])).unwrap();
        let stats = w.stats(&[0, 1, 2, 3]);
        let s = w.standardized(&stats);
        let again = s.stats(&[0, 1, 2, 3]);
        for f in 0..6 {
            assert!(again.mean[f].abs() < 1e-12);
            assert!((again.std[f] - 1.0).abs() < 1e-12);
        }
        let b = w.batch::<f32>(&[2, 0]);
        assert_eq!(b.shape(), &[2, 6, 16]);
        assert_eq!(b.data()[0], w.window(2)[0] as f32);
        assert_eq!(w.subset(&[3, 1]).window(0), w.window(3));
    }
}
