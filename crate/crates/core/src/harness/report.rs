use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::harness::{mann_whitney_u, MannWhitney};
use crate::metrics::EvalReport;
use crate::{Error, Result};

/// `"0.912±0.013"`.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.3}±{std:.3}")
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub repetition: usize,
    pub fold: usize,
    /// Seed of model initialization and shuffling for this split.
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub epoch_losses: Vec<f64>,
    pub eval: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    /// Splits that reported the metric.
    pub count: usize,
    pub formatted: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub model: String,
    pub other: String,
    pub test: MannWhitney,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub model: String,
    /// Hex form of the run-config hash.
    pub config_hash: String,
    pub seed: u64,
    pub splits: Vec<SplitReport>,
    pub aggregate: BTreeMap<String, Aggregate>,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
}

impl CrossValReport {
    pub fn new(model: &str, config_hash: u64, seed: u64, splits: Vec<SplitReport>) -> Self {
        let mut report = Self {
            model: model.to_string(),
            config_hash: format!("{config_hash:016x}"),
            seed,
            splits,
            aggregate: BTreeMap::new(),
            comparisons: Vec::new(),
        };
        report.aggregate = report.compute_aggregate();
        report
    }

    /// Per-split values of `metric`, in split order, skipping splits that
    /// did not report it.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.splits
            .iter()
            .filter_map(|s| s.eval.metrics().into_iter().find(|(name, _)| name == metric).map(|(_, v)| v))
            .collect()
    }

    pub fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for s in &self.splits {
            for (name, _) in s.eval.metrics() {
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        names
    }

    pub fn compute_aggregate(&self) -> BTreeMap<String, Aggregate> {
        self.metric_names()
            .into_iter()
            .map(|name| {
                let values = self.values(&name);
                let (mean, std) = mean_std(&values);
                let agg = Aggregate {
                    mean,
                    std,
                    count: values.len(),
                    formatted: format_mean_std(mean, std),
                };
                (name, agg)
            })
            .collect()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).map(|a| a.mean)
    }

    /// One Mann-Whitney test per metric shared by both reports, over the
    /// per-split values.
    pub fn compare(&self, other: &CrossValReport) -> Result<Vec<Comparison>> {
        let theirs = other.metric_names();
        let mut out = Vec::new();
        for metric in self.metric_names().into_iter().filter(|m| theirs.contains(m)) {
            let test = mann_whitney_u(&self.values(&metric), &other.values(&metric))?;
            out.push(Comparison {
                metric,
                model: self.model.clone(),
                other: other.model.clone(),
                test,
            });
        }
        Ok(out)
    }

    /// Aggregate rows as aligned text, one metric per line.
    pub fn summary(&self) -> String {
        let mut out = format!("{} ({} splits)\n", self.model, self.splits.len());
        for (name, a) in &self.aggregate {
            out += &format!("  {name:<8} {}\n", a.formatted);
        }
        out
    }
}

pub fn to_json<V: Serialize>(value: &V) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<V: Serialize>(path: impl AsRef<Path>, value: &V) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(value)?).map_err(|e| Error::io(path, e))
}

pub fn read_json<V: DeserializeOwned>(path: impl AsRef<Path>) -> Result<V> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eval(g: f64, mauc: Option<f64>) -> EvalReport {
        EvalReport {
            samples: 10,
            g_mean: g,
            mauc,
            mmcc: g / 2.0,
            acc_0: g,
            acc_k: [(1, g + 0.01)].into_iter().collect(),
            confusion: vec![vec![1, 0], vec![0, 1]],
        }
    }

    fn split(i: usize, g: f64, mauc: Option<f64>) -> SplitReport {
        SplitReport {
            repetition: i / 2,
            fold: i % 2,
            seed: i as u64,
            train_size: 5,
            test_size: 5,
            epoch_losses: vec![1.0, 0.5],
            eval: eval(g, mauc),
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(format_mean_std(0.91234, 0.0126), "0.912±0.013");
        assert_eq!(format_mean_std(1.0, 0.0), "1.000±0.000");
    }

    #[test]
    fn mean_std_oracle() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert_abs_diff_eq!(s, (32.0f64 / 7.0).sqrt(), epsilon = 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn aggregate_skips_missing_values() {
        let splits = (0..4).map(|i| split(i, 0.1 * i as f64, (i != 2).then_some(0.9))).collect();
        let r = CrossValReport::new("m", 0xAB, 1, splits);
        assert_eq!(r.config_hash, "00000000000000ab");
        assert_eq!(r.aggregate["mauc"].count, 3);
        assert_eq!(r.aggregate["g_mean"].count, 4);
        assert_abs_diff_eq!(r.aggregate["g_mean"].mean, 0.15, epsilon = 1e-12);
        assert_eq!(r.metric_names(), vec!["g_mean", "mauc", "mmcc", "acc_1"]);
    }

    #[test]
    fn identical_reports_compare_with_p_one() {
        let splits: Vec<_> = (0..10).map(|i| split(i, 0.5 + 0.01 * i as f64, Some(0.8))).collect();
        let r = CrossValReport::new("m", 0, 1, splits);
        for c in r.compare(&r.clone()).unwrap() {
            assert_eq!(c.test.p_value, 1.0, "{}", c.metric);
        }
    }

    #[test]
    fn json_round_trip() {
        let r = CrossValReport::new("m", 7, 1, vec![split(0, 0.3, None), split(1, 0.4, Some(0.7))]);
        let text = to_json(&r).unwrap();
        assert!(text.contains("\"formatted\": \"0.350±0.071\""), "{text}");
        let back: CrossValReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back).unwrap(), text);
    }
}
