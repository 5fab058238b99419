use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::{acc_k, g_mean, mauc, mmcc, ConfusionMatrix, ScoreMatrix};
use crate::{Error, Result};

/// Tolerances reported by default.
pub const DEFAULT_KS: [usize; 3] = [1, 3, 5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub g_mean: f64,
    /// Absent when fewer than two classes occur in the evaluated set.
    pub mauc: Option<f64>,
    pub mmcc: f64,
    /// Exact accuracy (`k = 0`).
    pub acc_0: f64,
    /// Accuracy at each requested tolerance.
    pub acc_k: BTreeMap<usize, f64>,
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    pub fn acc(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(self.acc_0)
        } else {
            self.acc_k.get(&k).copied()
        }
    }

    /// Named scalar metrics in a fixed order, as aggregated across splits.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = vec![("g_mean".to_string(), self.g_mean)];
        if let Some(m) = self.mauc {
            out.push(("mauc".into(), m));
        }
        out.push(("mmcc".into(), self.mmcc));
        out.extend(self.acc_k.iter().map(|(k, v)| (format!("acc_{k}"), *v)));
        out
    }
}

/// Evaluates scores and predictions (argmax of the scores when `None`)
/// against the labels stored in `scores`.
pub fn eval_report(scores: &ScoreMatrix, predictions: Option<&[usize]>, ks: &[usize]) -> Result<EvalReport> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("evaluation on an empty sample".into()));
    }
    let argmax;
    let preds = match predictions {
        Some(p) => p,
        None => {
            argmax = scores.argmax();
            &argmax
        }
    };
    let labels = scores.labels();
    let cm = ConfusionMatrix::from_predictions(labels, preds, scores.classes())?;
    let mut acc = BTreeMap::new();
    for &k in ks {
        acc.insert(k, acc_k(preds, labels, k)?);
    }
    let mauc = if scores.present_classes().len() >= 2 {
        Some(mauc(scores)?)
    } else {
        None
    };
    Ok(EvalReport {
        samples: labels.len(),
        g_mean: g_mean(&cm)?,
        mauc,
        mmcc: mmcc(&cm),
        acc_0: acc_k(preds, labels, 0)?,
        acc_k: acc,
        confusion: cm.rows(),
    })
}
