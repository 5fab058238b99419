//! Training, cross-validation, statistics, checkpoints, reports and the
//! command-line interface.

mod checkpoint;
pub mod cli;
mod config;
mod crossval;
mod equicheck;
mod report;
mod stats;
mod train;

pub use checkpoint::{Checkpoint, NamedTensor, Provenance, Stage, FORMAT_VERSION, MAGIC};
pub use config::{DataSource, RunConfig};
pub use crossval::{crossval, crossval_splits, fold_data, split_seed, train_split, worker_threads, FoldData, SplitRun, THREADS_ENV};
pub use equicheck::{equicheck, group_layer_errors, EquiCheck, GRADIENT_TOLERANCE, LAYER_TOLERANCE};
pub use report::{
    format_mean_std, mean_std, read_json, to_json, write_json, Aggregate, Comparison, CrossValReport, SplitReport,
};
pub use stats::{mann_whitney_exact, mann_whitney_normal, mann_whitney_u, MannWhitney, ALPHA, EXACT_MAX_N};
pub use train::{evaluate, predict_scores, train_supervised, TrainOptions, TrainOutcome};
