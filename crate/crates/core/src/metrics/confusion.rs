use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Counts `C[i][j]` of samples with true class `i` predicted as `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be square".into()));
        }
        Ok(Self {
            classes: k,
            counts: rows.concat(),
        })
    }

    pub fn from_predictions(labels: &[usize], predictions: &[usize], classes: usize) -> Result<Self> {
        if labels.len() != predictions.len() {
            return Err(Error::Shape(format!(
                "{} labels but {} predictions",
                labels.len(),
                predictions.len()
            )));
        }
        let mut cm = Self::new(classes);
        for (&y, &p) in labels.iter().zip(predictions) {
            if y >= classes || p >= classes {
                return Err(Error::InvalidArgument(format!(
                    "class pair ({y}, {p}) out of range for {classes} classes"
                )));
            }
            cm.counts[y * classes + p] += 1;
        }
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.classes.max(1)).map(<[u64]>::to_vec).collect()
    }

    /// `s`: number of evaluated samples.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `c`: number of correct predictions.
    pub fn correct(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    /// Samples whose true class is `k` (row sums).
    pub fn true_counts(&self) -> Vec<u64> {
        (0..self.classes).map(|k| (0..self.classes).map(|j| self.get(k, j)).sum()).collect()
    }

    /// Samples predicted as class `k` (column sums).
    pub fn predicted_counts(&self) -> Vec<u64> {
        (0..self.classes).map(|k| (0..self.classes).map(|i| self.get(i, k)).sum()).collect()
    }
}

/// Geometric mean of per-class recall over classes present in the truth.
pub fn g_mean(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::InvalidArgument("g-mean of an empty confusion matrix".into()));
    }
    let truth = cm.true_counts();
    let recalls: Vec<f64> = (0..cm.classes())
        .filter(|&k| truth[k] > 0)
        .map(|k| cm.get(k, k) as f64 / truth[k] as f64)
        .collect();
    if recalls.contains(&0.0) {
        return Ok(0.0);
    }
    let log_mean = recalls.iter().map(|r| r.ln()).sum::<f64>() / recalls.len() as f64;
    Ok(log_mean.exp())
}

/// Multi-class Matthews correlation coefficient; 0 when undefined.
pub fn mmcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    let c = cm.correct() as f64;
    let t: Vec<f64> = cm.true_counts().iter().map(|&v| v as f64).collect();
    let p: Vec<f64> = cm.predicted_counts().iter().map(|&v| v as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let denom = ((s * s - pp) * (s * s - tt)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        ((c * s - pt) / denom).clamp(-1.0, 1.0)
    }
}

/// Share of predictions that are exactly right for absence (class 0) or
/// within `k` positions of the true location for present waves.
pub fn acc_k(predictions: &[usize], labels: &[usize], k: usize) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty sample".into()));
    }
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|&(&p, &y)| if y == 0 { p == 0 } else { p != 0 && p.abs_diff(y) <= k })
        .count();
    Ok(correct as f64 / labels.len() as f64)
}
