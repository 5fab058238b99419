use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Windows;
use crate::metrics::{eval_report, EvalReport, ScoreMatrix};
use crate::models::Network;
use crate::numerics::{ops, AdamConfig, AdamState, Graph, Mode, Real, Tensor};
use crate::rng::{self, streams};
use crate::{Error, Result, NUM_CLASSES};

/// Rows per forward pass during evaluation.
const EVAL_BATCH: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub epochs: usize,
    /// Clamped to the training-set size.
    pub batch_size: usize,
    pub optimizer: AdamConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 400,
            batch_size: 1024,
            optimizer: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Mean cross-entropy of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Batch size actually used.
    pub batch_size: usize,
}

/// Minimizes softmax cross-entropy with Adam over shuffled mini-batches.
/// Batches of a single window are skipped unless the whole set is one window.
pub fn train_supervised<T: Real>(
    net: &mut Network<T>,
    train: &Windows,
    opts: &TrainOptions,
    seed: u64,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let n = train.len();
    let batch_size = opts.batch_size.min(n);
    let slots = net.store().param_slots();
    let initial: Vec<Tensor<T>> = slots.iter().map(|&s| net.store().tensor(s).clone()).collect();
    let mut adam = AdamState::new(opts.optimizer, &initial);
    drop(initial);

    let mut rng = rng::stream(seed, streams::SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut outcome = TrainOutcome {
        epoch_losses: Vec::with_capacity(opts.epochs),
        batch_size,
    };
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut seen) = (0.0, 0usize);
        for (b, batch) in order.chunks(batch_size).enumerate() {
            if batch.len() < 2 && n > 1 {
                continue;
            }
            let labels: Vec<usize> = batch.iter().map(|&i| train.labels()[i]).collect();
            let mut g = Graph::new();
            let x = g.input(train.batch::<T>(batch));
            let logits = net.forward(&mut g, x, Mode::Train)?;
            let loss = ops::softmax_cross_entropy(&mut g, logits, &labels)?;
            let value = g.value(loss).item().as_f64();
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}, batch {b}")));
            }
            let grads = g.backward(loss)?;
            let mut by_slot: Vec<Option<Tensor<T>>> = vec![None; net.store().len()];
            for (slot, grad) in grads.params() {
                by_slot[slot] = Some(grad);
            }
            let ordered: Vec<Option<Tensor<T>>> = slots.iter().map(|&s| by_slot[s].take()).collect();
            adam.step(&mut net.store_mut().params_mut(), &ordered)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}: {e}")))?;
            total += value * batch.len() as f64;
            seen += batch.len();
        }
        let mean = total / seen.max(1) as f64;
        log::debug!("epoch {}/{}: loss {mean:.4}", epoch + 1, opts.epochs);
        outcome.epoch_losses.push(mean);
    }
    Ok(outcome)
}

/// Softmax scores of every window, in eval mode, as a 64-bit score matrix.
pub fn predict_scores<T: Real>(net: &mut Network<T>, windows: &Windows) -> Result<ScoreMatrix> {
    let mut scores = Vec::with_capacity(windows.len() * NUM_CLASSES);
    let all: Vec<usize> = (0..windows.len()).collect();
    for chunk in all.chunks(EVAL_BATCH) {
        let logits = net.logits(&windows.batch::<T>(chunk), Mode::Eval)?;
        let probs = ops::softmax(&logits.cast::<f64>());
        scores.extend_from_slice(probs.data());
    }
    ScoreMatrix::probabilities(scores, NUM_CLASSES, windows.labels().to_vec())
}

pub fn evaluate<T: Real>(net: &mut Network<T>, windows: &Windows, ks: &[usize]) -> Result<EvalReport> {
    let scores = predict_scores(net, windows)?;
    eval_report(&scores, None, ks)
}
