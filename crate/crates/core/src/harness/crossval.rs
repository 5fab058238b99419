use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::contrastive::transfer;
use crate::data::{kfold_5x2, Split, StandardizationStats, Windows};
use crate::harness::{evaluate, train_supervised, CrossValReport, RunConfig, SplitReport, TrainOutcome};
use crate::models::{Network, ParamStore};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Environment variable capping the number of concurrent split workers.
pub const THREADS_ENV: &str = "STECNN_THREADS";

/// Worker count from `STECNN_THREADS`; 1 when unset or invalid.
pub fn worker_threads() -> usize {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                log::warn!("ignoring {THREADS_ENV}={v:?}; using one worker");
                1
            }
        },
        Err(_) => 1,
    }
}

/// Seed of the split with index `index` (`2 * repetition + fold`).
pub fn split_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, 1_000 + index as u64)
}

/// Standardized train and test folds of one split.
pub struct FoldData {
    pub train: Windows,
    pub test: Windows,
    pub stats: StandardizationStats,
}

/// Applies training-fold statistics to both folds, or `global` when given.
pub fn fold_data(windows: &Windows, split: &Split, global: Option<&StandardizationStats>) -> FoldData {
    let stats = match global {
        Some(s) => s.clone(),
        None => windows.stats(&split.train),
    };
    FoldData {
        train: windows.subset(&split.train).standardized(&stats),
        test: windows.subset(&split.test).standardized(&stats),
        stats,
    }
}

/// A trained split model together with what it was trained on.
pub struct SplitRun {
    pub net: Network<f32>,
    pub data: FoldData,
    pub outcome: TrainOutcome,
    pub seed: u64,
}

/// Builds, optionally warm-starts, and trains the model of one split.
pub fn train_split(
    cfg: &RunConfig,
    windows: &Windows,
    split: &Split,
    pretrained: Option<&ParamStore<f32>>,
) -> Result<SplitRun> {
    let index = 2 * split.repetition + split.fold;
    let seed = split_seed(cfg.seed, index);
    let global = cfg.global_standardization.then(|| windows.stats(&(0..windows.len()).collect::<Vec<_>>()));
    let data = fold_data(windows, split, global.as_ref());
    let mut net = Network::<f32>::build(&cfg.model, seed)?;
    if let Some(source) = pretrained {
        transfer(source, &mut net)?;
    }
    let outcome = train_supervised(&mut net, &data.train, &cfg.train_options(), seed)?;
    Ok(SplitRun { net, data, outcome, seed })
}

fn run_split(
    cfg: &RunConfig,
    windows: &Windows,
    split: &Split,
    pretrained: Option<&ParamStore<f32>>,
) -> Result<SplitReport> {
    let mut run = train_split(cfg, windows, split, pretrained)?;
    let eval = evaluate(&mut run.net, &run.data.test, &cfg.ks)?;
    log::info!(
        "split {}/{}: g_mean {:.3}, acc_1 {:.3}",
        split.repetition,
        split.fold,
        eval.g_mean,
        eval.acc(1).unwrap_or(f64::NAN)
    );
    Ok(SplitReport {
        repetition: split.repetition,
        fold: split.fold,
        seed: run.seed,
        train_size: split.train.len(),
        test_size: split.test.len(),
        epoch_losses: run.outcome.epoch_losses,
        eval,
    })
}

/// 5x2 cross-validation: every split trains a fresh model on its training
/// fold and is scored on its test fold. Splits run on up to
/// [`worker_threads`] workers; the report does not depend on the count.
pub fn crossval(cfg: &RunConfig, windows: &Windows, pretrained: Option<&ParamStore<f32>>) -> Result<CrossValReport> {
    crossval_splits(cfg, windows, pretrained, &kfold_5x2(windows.len(), cfg.seed)?, worker_threads())
}

/// Cross-validation over an explicit list of splits with `workers` threads.
pub fn crossval_splits(
    cfg: &RunConfig,
    windows: &Windows,
    pretrained: Option<&ParamStore<f32>>,
    splits: &[Split],
    workers: usize,
) -> Result<CrossValReport> {
    cfg.validate()?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SplitReport>>>> = Mutex::new((0..splits.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, splits.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= splits.len() {
                    break;
                }
                let r = run_split(cfg, windows, &splits[i], pretrained);
                results.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    let mut reports = Vec::with_capacity(splits.len());
    for r in results.into_inner().expect("result slots") {
        reports.push(r.ok_or_else(|| Error::InvalidArgument("split worker did not finish".into()))??);
    }
    Ok(CrossValReport::new(cfg.model.name(), cfg.hash(), cfg.seed, reports))
}
