//! Imbalanced multi-class evaluation.

mod auc;
mod confusion;
mod report;

pub use auc::{auc_from_scores, mauc, pairwise_auc, ScoreMatrix};
pub use confusion::{acc_k, g_mean, mmcc, ConfusionMatrix};
pub use report::{eval_report, EvalReport, DEFAULT_KS};
