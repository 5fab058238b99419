use stecnn::data::{synthesize, windowize, StandardizationStats, SyntheticConfig, Windows};
use stecnn::groupconv::{lift_tensor, LiftingKernel, ScaleGrid};
use stecnn::harness::{evaluate, train_supervised, TrainOptions};
use stecnn::metrics::{acc_k, g_mean, mmcc, ConfusionMatrix};
use stecnn::models::{EquiOneDcnnConfig, ModelConfig, Network};
use stecnn::numerics::{ops, Mode, Padding, Tensor};
use stecnn::rng::stream;
use stecnn::{Error, Result, NUM_CLASSES, NUM_FEATURES, WINDOW_LEN};

use rand::Rng;

/// Along-track locations synthesized for the lab; 600 windows.
const TRACK_LEN: usize = 9_600;
const TRAIN_WINDOWS: usize = 480;

/// A small equivariant model trained in place on synthetic windows.
pub struct Lab {
    net: Network<f32>,
    train: Windows,
    test: Windows,
    probe: Windows,
    stats: StandardizationStats,
    epochs: usize,
    seed: u64,
}

pub fn small_model() -> ModelConfig {
    ModelConfig::EquiOnedcnn(EquiOneDcnnConfig {
        lift_channels: 8,
        gconv_channels: vec![16],
        head_hidden: vec![32],
        ..Default::default()
    })
}

fn windows(seed: u64, width_scale: f64) -> Result<Windows> {
    windowize(&synthesize(&SyntheticConfig {
        length: TRACK_LEN,
        seed,
        dyadic_levels: 1,
        width_scale,
        ..Default::default()
    })?)
}

impl Lab {
    pub fn new(seed: u64) -> Result<Self> {
        let all = windows(seed, 1.0)?;
        let train_idx: Vec<usize> = (0..TRAIN_WINDOWS).collect();
        let test_idx: Vec<usize> = (TRAIN_WINDOWS..all.len()).collect();
        let stats = all.stats(&train_idx);
        Ok(Self {
            net: Network::build(&small_model(), seed)?,
            train: all.subset(&train_idx).standardized(&stats),
            test: all.subset(&test_idx).standardized(&stats),
            probe: all.subset(&test_idx).standardized(&stats),
            stats,
            epochs: 0,
            seed,
        })
    }

    /// Replaces the probe windows with the held-out part of a track whose
    /// signatures are `width_scale` times wider.
    pub fn set_width_scale(&mut self, width_scale: f64) -> Result<()> {
        let all = windows(self.seed, width_scale)?;
        let idx: Vec<usize> = (TRAIN_WINDOWS..all.len()).collect();
        self.probe = all.subset(&idx).standardized(&self.stats);
        Ok(())
    }

    /// Runs `epochs` more epochs; returns the mean loss of the last one.
    pub fn train(&mut self, epochs: usize) -> Result<f64> {
        let opts = TrainOptions {
            epochs,
            batch_size: 32,
            optimizer: Default::default(),
        };
        let seed = self.seed.wrapping_add(self.epochs as u64);
        let out = train_supervised(&mut self.net, &self.train, &opts, seed)?;
        self.epochs += epochs;
        Ok(out.epoch_losses.last().copied().unwrap_or(f64::NAN))
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// (Acc-1, G-mean) on the held-out windows.
    pub fn score(&mut self) -> Result<(f64, f64)> {
        let r = evaluate(&mut self.net, &self.probe, &[1])?;
        Ok((r.acc(1).unwrap_or(0.0), r.g_mean))
    }

    pub fn probe_len(&self) -> usize {
        self.probe.len()
    }

    /// Standardized probe window `i`, feature-major `[6 * 16]`.
    pub fn window(&self, i: usize) -> Result<Vec<f64>> {
        self.check(i)?;
        Ok(self.probe.window(i).to_vec())
    }

    pub fn label(&self, i: usize) -> Result<usize> {
        self.check(i)?;
        Ok(self.probe.labels()[i])
    }

    /// Class probabilities for probe window `i`.
    pub fn predict(&mut self, i: usize) -> Result<Vec<f64>> {
        self.check(i)?;
        let x = self.probe.batch::<f32>(&[i]);
        let logits = self.net.logits(&x, Mode::Eval)?;
        Ok(ops::softmax(&logits).to_f64_vec())
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.probe.len() {
            return Err(Error::InvalidArgument(format!("window {i} out of range ({} windows)", self.probe.len())));
        }
        Ok(())
    }

    pub fn held_out(&self) -> usize {
        self.test.len()
    }
}

/// One channel of a random lifting layer applied to a random window and to
/// the same window shifted by `shift`.
pub struct ShiftDemo {
    pub input: Vec<f64>,
    /// `[scales * 16]` response to the shifted input.
    pub of_shifted: Vec<f64>,
    /// `[scales * 16]` shifted response to the original input.
    pub shifted: Vec<f64>,
    pub max_error: f64,
    pub scales: usize,
}

pub fn shift_demo(seed: u64, shift: usize) -> Result<ShiftDemo> {
    let scales = 3;
    let grid = ScaleGrid::new(scales)?;
    let mut rng = stream(seed, 0);
    let w = Tensor::<f64>::from_fn(&[1, NUM_FEATURES, 3], |_| rng.random_range(-1.0..1.0));
    let x = Tensor::<f64>::from_fn(&[1, NUM_FEATURES, WINDOW_LEN], |_| rng.random_range(-1.0..1.0));
    let kernel = LiftingKernel::new(w, grid)?;
    let t = shift % WINDOW_LEN;
    let of_shifted = lift_tensor(&x.roll_last(t), &kernel, Padding::Circular)?;
    let shifted = lift_tensor(&x, &kernel, Padding::Circular)?.roll_last(t);
    Ok(ShiftDemo {
        input: x.into_data(),
        max_error: of_shifted.max_abs_diff(&shifted),
        of_shifted: of_shifted.into_data(),
        shifted: shifted.into_data(),
        scales,
    })
}

/// Confusion-matrix metrics for location labels and predictions in `0..=16`.
pub fn metrics_json(labels: &[usize], predictions: &[usize]) -> Result<String> {
    let cm = ConfusionMatrix::from_predictions(labels, predictions, NUM_CLASSES)?;
    let acc: Vec<f64> = (0..4).map(|k| acc_k(predictions, labels, k)).collect::<Result<_>>()?;
    let value = serde_json::json!({
        "samples": labels.len(),
        "g_mean": g_mean(&cm)?,
        "mmcc": mmcc(&cm),
        "acc_0": acc[0],
        "acc_1": acc[1],
        "acc_2": acc[2],
        "acc_3": acc[3],
    });
    Ok(value.to_string())
}

/// Parses a comma or whitespace separated list of class indices.
pub fn parse_classes(text: &str) -> Result<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<usize>() {
            Ok(v) if v < NUM_CLASSES => Ok(v),
            _ => Err(Error::InvalidArgument(format!("{s:?} is not a class in 0..={}", NUM_CLASSES - 1))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lab_trains_and_predicts() {
        let mut lab = Lab::new(1).unwrap();
        assert_eq!(lab.probe_len(), 120);
        assert_eq!(lab.held_out(), 120);
        let first = lab.train(1).unwrap();
        let second = lab.train(2).unwrap();
        assert!(second < first, "{first} -> {second}");
        assert_eq!(lab.epochs(), 3);
        let p = lab.predict(0).unwrap();
        assert_eq!(p.len(), NUM_CLASSES);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        assert_eq!(lab.window(3).unwrap().len(), NUM_FEATURES * WINDOW_LEN);
        lab.set_width_scale(2.0).unwrap();
        assert_eq!(lab.probe_len(), 120);
        assert!(lab.predict(500).is_err());
    }

    #[test]
    fn shift_demo_is_exact() {
        for t in [0, 5, 17] {
            let d = shift_demo(3, t).unwrap();
            assert_eq!(d.of_shifted.len(), 3 * WINDOW_LEN);
            assert!(d.max_error <= 1e-12, "{}", d.max_error);
        }
    }

    #[test]
    fn metrics_and_parsing() {
        let labels = parse_classes("0, 3 4\n0").unwrap();
        let preds = parse_classes("0,4,4,0").unwrap();
        let v: serde_json::Value = serde_json::from_str(&metrics_json(&labels, &preds).unwrap()).unwrap();
        assert_eq!(v["acc_0"], 0.75);
        assert_eq!(v["acc_1"], 1.0);
        assert!(parse_classes("1,17").is_err());
        assert!(metrics_json(&[1], &[1, 2]).is_err());
    }
}
