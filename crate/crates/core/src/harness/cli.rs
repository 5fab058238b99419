use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::contrastive::{pretrain, transfer, PretrainOutcome};
use crate::data::{save_csv, synthesize, StandardizationStats, SyntheticConfig, Windows};
use crate::harness::{
    crossval, equicheck, evaluate, read_json, train_supervised, write_json, Checkpoint, Comparison, CrossValReport,
    DataSource, Provenance, RunConfig, Stage,
};
use crate::metrics::EvalReport;
use crate::models::{Network, ParamStore};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stecnn", version, about = "Scale-translation equivariant CNNs for ISW localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic along-track dataset as CSV.
    Synth(SynthArgs),
    /// Train one model on the whole dataset and save a checkpoint.
    Train(TrainArgs),
    /// Contrastive pre-training of a model trunk.
    Pretrain(TrainArgs),
    /// 5x2 cross-validation with a JSON report.
    Crossval(CrossvalArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Equivariance and gradient checks for a model configuration.
    Equicheck(EquicheckArgs),
    /// Mann-Whitney U tests between two cross-validation reports.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    positive_fraction: Option<f64>,
    /// Multiplies every signature width.
    #[arg(long)]
    width_scale: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Overrides the configured number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Run configuration the checkpoint was trained with.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// CSV dataset; defaults to the configured data source.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EquicheckArgs {
    #[arg(long)]
    config: PathBuf,
    /// Random weight draws (and inputs per draw) for the layer probes.
    #[arg(long, default_value_t = 5)]
    draws: usize,
}

#[derive(Debug, Args)]
struct CompareArgs {
    first: PathBuf,
    second: PathBuf,
    /// Writes the comparison records as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    model: String,
    config_hash: String,
    seed: u64,
    batch_size: usize,
    epoch_losses: Vec<f64>,
    /// Scores on the training data itself.
    train: EvalReport,
}

#[derive(Debug, Serialize)]
struct PretrainReport {
    model: String,
    config_hash: String,
    seed: u64,
    windows: usize,
    #[serde(flatten)]
    outcome: PretrainOutcome,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    model: String,
    checkpoint: String,
    eval: EvalReport,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Pretrain(a) => pretrain_cmd(a),
        Command::Crossval(a) => crossval_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Equicheck(a) => equicheck_cmd(a),
        Command::Compare(a) => compare(a),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<SyntheticConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => SyntheticConfig::default(),
    };
    if let Some(v) = a.length {
        cfg.length = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.positive_fraction {
        cfg.positive_fraction = v;
    }
    if let Some(v) = a.width_scale {
        cfg.width_scale = v;
    }
    let track = synthesize(&cfg)?;
    save_csv(&track, &a.out)?;
    let positives = track.labels().iter().filter(|&&l| l == 1).count();
    println!("wrote {} locations ({positives} positive) to {}", track.len(), a.out.display());
    Ok(())
}

fn load_config(path: &Path, epochs: Option<usize>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if epochs.is_some() {
        cfg.epochs = epochs;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn config_dir(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

fn load_windows(cfg: &RunConfig, config_path: &Path) -> Result<Windows> {
    let windows = cfg.data.load(config_dir(config_path))?;
    log::info!("{} windows loaded", windows.len());
    Ok(windows)
}

fn all_stats(windows: &Windows) -> StandardizationStats {
    windows.stats(&(0..windows.len()).collect::<Vec<_>>())
}

/// Trunk weights named by the config, if any.
fn pretrained_store(cfg: &RunConfig, config_path: &Path) -> Result<Option<ParamStore<f32>>> {
    let Some(path) = &cfg.pretrain_checkpoint else {
        return Ok(None);
    };
    let path = match config_dir(config_path) {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.clone(),
    };
    let ck = Checkpoint::load(&path)?;
    if ck.provenance.stage != Stage::Pretrain {
        log::warn!("{} was not written by pretrain", path.display());
    }
    Ok(Some(ck.to_store()?))
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.epochs, a.seed)?;
    let windows = load_windows(&cfg, &a.config)?;
    let stats = all_stats(&windows);
    let data = windows.standardized(&stats);
    let mut net = Network::<f32>::build(&cfg.model, cfg.seed)?;
    if let Some(source) = pretrained_store(&cfg, &a.config)? {
        let n = transfer(&source, &mut net)?;
        log::info!("copied {n} pre-trained trunk tensors");
    }
    let outcome = train_supervised(&mut net, &data, &cfg.train_options(), cfg.seed)?;
    let provenance = Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        stage: Stage::Supervised,
    };
    Checkpoint::from_store(net.store(), provenance).with_stats(&stats).save(&a.out)?;
    let train_eval = evaluate(&mut net, &data, &cfg.ks)?;
    println!(
        "{}: {} epochs, final loss {}, train acc_1 {:.3}",
        cfg.model.name(),
        outcome.epoch_losses.len(),
        outcome.epoch_losses.last().map_or("n/a".into(), |l| format!("{l:.4}")),
        train_eval.acc(1).unwrap_or(f64::NAN)
    );
    if let Some(path) = &a.report {
        write_json(
            path,
            &TrainReport {
                model: cfg.model.name().into(),
                config_hash: format!("{:016x}", cfg.hash()),
                seed: cfg.seed,
                batch_size: outcome.batch_size,
                epoch_losses: outcome.epoch_losses,
                train: train_eval,
            },
        )?;
    }
    Ok(())
}

fn pretrain_cmd(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(&a.config, None, a.seed)?;
    if let Some(e) = a.epochs {
        cfg.pretrain.epochs = e;
    }
    let windows = load_windows(&cfg, &a.config)?;
    let data = windows.standardized(&all_stats(&windows));
    let mut net = Network::<f32>::build(&cfg.model, cfg.seed)?;
    let outcome = pretrain(&mut net, &data.to_tensor(), &cfg.pretrain, cfg.seed)?;
    let provenance = Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        stage: Stage::Pretrain,
    };
    Checkpoint::from_store(net.store(), provenance).save(&a.out)?;
    let first = outcome.epoch_losses.first().copied().unwrap_or(f64::NAN);
    let last = outcome.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!("{}: NT-Xent {first:.4} -> {last:.4}", cfg.model.name());
    if let Some(path) = &a.report {
        write_json(
            path,
            &PretrainReport {
                model: cfg.model.name().into(),
                config_hash: format!("{:016x}", cfg.hash()),
                seed: cfg.seed,
                windows: data.len(),
                outcome,
            },
        )?;
    }
    Ok(())
}

fn crossval_cmd(a: CrossvalArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.epochs, a.seed)?;
    let windows = load_windows(&cfg, &a.config)?;
    let pretrained = pretrained_store(&cfg, &a.config)?;
    let report = crossval(&cfg, &windows, pretrained.as_ref())?;
    write_json(&a.report, &report)?;
    print!("{}", report.summary());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let ck = Checkpoint::load(&a.checkpoint)?;
    if ck.provenance.config_hash != cfg.hash() {
        log::warn!("checkpoint was written under a different configuration");
    }
    let windows = match &a.data {
        Some(path) => DataSource::Csv { path: path.clone() }.load(None)?,
        None => load_windows(&cfg, &a.config)?,
    };
    let stats = match ck.stats()? {
        Some(s) => s,
        None => {
            log::warn!("checkpoint holds no standardization statistics; using the dataset's own");
            all_stats(&windows)
        }
    };
    let mut net = Network::<f32>::build(&cfg.model, ck.provenance.seed)?;
    ck.load_into(&mut net)?;
    let report = evaluate(&mut net, &windows.standardized(&stats), &cfg.ks)?;
    println!("{} on {} windows:", cfg.model.name(), report.samples);
    for (name, v) in report.metrics() {
        println!("  {name:<8} {v:.4}");
    }
    if let Some(path) = &a.report {
        write_json(
            path,
            &EvalOutput {
                model: cfg.model.name().into(),
                checkpoint: a.checkpoint.display().to_string(),
                eval: report,
            },
        )?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.3e}"))
}

fn equicheck_cmd(a: EquicheckArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    let r = equicheck(&cfg.model, a.draws, cfg.seed)?;
    println!("model {}", r.model);
    println!("translation_error {}", fmt_opt(r.translation_error));
    println!("scale_error {}", fmt_opt(r.scale_error));
    println!("feature_map_shift_error {}", fmt_opt(r.feature_map_shift_error));
    println!("gradient_error {:.3e}", r.gradient_error);
    if r.passed() {
        println!("ok");
        Ok(())
    } else {
        Err(Error::CheckFailed("equivariance or gradient error above tolerance".into()))
    }
}

fn compare(a: CompareArgs) -> Result<()> {
    let first: CrossValReport = read_json(&a.first)?;
    let second: CrossValReport = read_json(&a.second)?;
    let comparisons: Vec<Comparison> = first.compare(&second)?;
    println!("{} vs {}", first.model, second.model);
    for c in &comparisons {
        println!(
            "  {:<8} U {:>6.1}  p {:.4}{}",
            c.metric,
            c.test.u,
            c.test.p_value,
            if c.test.significant { "  significant" } else { "" }
        );
    }
    if let Some(path) = &a.out {
        write_json(path, &comparisons)?;
    }
    Ok(())
}
