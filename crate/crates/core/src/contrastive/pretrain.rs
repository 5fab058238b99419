use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::contrastive::{augment, nt_xent, AugmentationPolicy};
use crate::models::{Network, ParamStore};
use crate::numerics::{ops, AdamConfig, AdamState, Graph, Mode, Real, Tensor, Var};
use crate::rng::{self, streams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainConfig {
    /// Windows per batch; each contributes two views.
    pub batch_size: usize,
    pub temperature: f64,
    pub epochs: usize,
    pub optimizer: AdamConfig,
    pub projection_dim: usize,
    pub augmentation: AugmentationPolicy,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            temperature: 0.1,
            epochs: 50,
            optimizer: AdamConfig::default(),
            projection_dim: 64,
            augmentation: AugmentationPolicy::default(),
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config(format!("pretrain batch_size must be >= 2, got {}", self.batch_size)));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if self.projection_dim == 0 {
            return Err(Error::Config("projection_dim must be positive".into()));
        }
        self.augmentation.validate()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PretrainOutcome {
    /// Mean NT-Xent loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Two dense layers mapping trunk features to the contrastive embedding.
struct Projection<T: Real> {
    store: ParamStore<T>,
}

impl<T: Real> Projection<T> {
    fn new(features: usize, out: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, streams::PRETRAIN);
        let mut store = ParamStore::new();
        store.add_uniform("proj.fc1.weight", &[features, features], features, &mut rng);
        store.add_uniform("proj.fc1.bias", &[features], features, &mut rng);
        store.add_uniform("proj.fc2.weight", &[features, out], features, &mut rng);
        store.add_uniform("proj.fc2.bias", &[out], features, &mut rng);
        Self { store }
    }

    fn forward(&self, g: &mut Graph<T>, offset: usize, h: Var) -> Result<Var> {
        let p: Vec<Var> = (0..4).map(|i| g.param(offset + i, self.store.tensor(i).clone())).collect();
        let h = ops::affine(g, h, p[0], p[1])?;
        let h = ops::relu(g, h);
        ops::affine(g, h, p[2], p[3])
    }
}

/// Two augmented views of every window in `batch`, interleaved so that rows
/// `2i` and `2i + 1` come from the same window.
fn views<T: Real>(windows: &Tensor<T>, batch: &[usize], policy: &AugmentationPolicy, epoch_seed: u64) -> Result<Tensor<T>> {
    let (c, l) = (windows.dim(1), windows.dim(2));
    let per = c * l;
    let mut data = Vec::with_capacity(2 * batch.len() * per);
    for &idx in batch {
        let window = Tensor::new(&[c, l], windows.data()[idx * per..(idx + 1) * per].to_vec())?;
        let mut rng = rng::stream(epoch_seed, idx as u64);
        for _ in 0..2 {
            data.extend_from_slice(augment(&window, policy, &mut rng).data());
        }
    }
    Tensor::new(&[2 * batch.len(), c, l], data)
}

/// Contrastive pre-training of `net`'s trunk on unlabeled `[M, 6, 16]`
/// windows. The projection head is discarded afterwards; `head.*` tensors of
/// `net` are left untouched.
pub fn pretrain<T: Real>(
    net: &mut Network<T>,
    windows: &Tensor<T>,
    cfg: &PretrainConfig,
    seed: u64,
) -> Result<PretrainOutcome> {
    cfg.validate()?;
    if windows.rank() != 3 || windows.dim(0) < 2 {
        return Err(Error::Shape(format!(
            "pretraining needs at least two [6, 16] windows, got {:?}",
            windows.shape()
        )));
    }
    let m = windows.dim(0);
    let batch_size = cfg.batch_size.min(m);
    let mut proj = Projection::<T>::new(net.feature_dim(), cfg.projection_dim, seed);
    let offset = net.store().len();
    let net_slots = net.store().param_slots();

    let initial: Vec<Tensor<T>> = net_slots
        .iter()
        .map(|&s| net.store().tensor(s).clone())
        .chain(proj.store.entries().iter().map(|e| e.tensor.clone()))
        .collect();
    let mut adam = AdamState::new(cfg.optimizer, &initial);
    drop(initial);

    let mut shuffle_rng = rng::stream(seed, streams::SHUFFLE);
    let augment_seed = rng::derive_seed(seed, streams::AUGMENT);
    let mut order: Vec<usize> = (0..m).collect();
    let mut outcome = PretrainOutcome::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let epoch_seed = rng::derive_seed(augment_seed, epoch as u64);
        let mut total = 0.0;
        let mut batches = 0usize;
        for (b, batch) in order.chunks(batch_size).enumerate() {
            if batch.len() < 2 {
                continue;
            }
            let x = views(windows, batch, &cfg.augmentation, epoch_seed)?;
            let mut g = Graph::new();
            let p = net.bind(&mut g);
            let xv = g.input(x);
            let features = net.features_bound(&mut g, &p, xv, Mode::Train)?;
            let z = proj.forward(&mut g, offset, features)?;
            let loss = nt_xent(&mut g, z, cfg.temperature)?;
            let value = g.value(loss).item().as_f64();
            if !value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "pretraining loss at epoch {epoch}, batch {b} ({} windows)",
                    batch.len()
                )));
            }
            let grads = g.backward(loss)?;
            let mut by_slot: Vec<Option<Tensor<T>>> = vec![None; offset + 4];
            for (slot, grad) in grads.params() {
                by_slot[slot] = Some(grad);
            }
            let ordered: Vec<Option<Tensor<T>>> = net_slots
                .iter()
                .copied()
                .chain(offset..offset + 4)
                .map(|s| by_slot[s].take())
                .collect();
            let mut params = net.store_mut().params_mut();
            params.extend(proj.store.params_mut());
            adam.step(&mut params, &ordered)?;
            total += value;
            batches += 1;
        }
        let mean = total / batches.max(1) as f64;
        log::info!("pretrain epoch {}/{}: nt-xent {mean:.4}", epoch + 1, cfg.epochs);
        outcome.epoch_losses.push(mean);
    }
    Ok(outcome)
}

/// Copies every `trunk.*` tensor of `source` into `target` by name. Head
/// tensors of `target` keep their own initialization. Returns the number of
/// tensors copied.
pub fn transfer<T: Real>(source: &ParamStore<T>, target: &mut Network<T>) -> Result<usize> {
    let is_trunk = |name: &str| name.starts_with("trunk.");
    let mut problems = Vec::new();
    for e in source.entries().iter().filter(|e| is_trunk(&e.name)) {
        match target.store().get(&e.name) {
            None => problems.push(format!("{} missing from target", e.name)),
            Some(t) if t.shape() != e.tensor.shape() => problems.push(format!(
                "{} has shape {:?} in source but {:?} in target",
                e.name,
                e.tensor.shape(),
                t.shape()
            )),
            Some(_) => {}
        }
    }
    for e in target.store().entries().iter().filter(|e| is_trunk(&e.name)) {
        if source.get(&e.name).is_none() {
            problems.push(format!("{} missing from source", e.name));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Shape(format!("cannot transfer weights: {}", problems.join("; "))));
    }
    let mut copied = 0;
    for e in source.entries().iter().filter(|e| is_trunk(&e.name)) {
        target.store_mut().assign(&e.name, e.tensor.clone())?;
        copied += 1;
    }
    Ok(copied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{EquiOneDcnnConfig, ModelConfig, OneDcnnConfig};
    use rand::Rng;

    fn small() -> ModelConfig {
        ModelConfig::EquiOnedcnn(EquiOneDcnnConfig {
            lift_channels: 4,
            gconv_channels: vec![6, 6],
            head_hidden: vec![8],
            ..Default::default()
        })
    }

    fn windows(m: usize, seed: u64) -> Tensor<f64> {
        let mut rng = rng::stream(seed, 0);
        Tensor::from_fn(&[m, 6, 16], |_| rng.random_range(-1.0..1.0))
    }

    fn quick() -> PretrainConfig {
        PretrainConfig {
            batch_size: 8,
            epochs: 2,
            projection_dim: 8,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_changes_nothing() {
        let mut net = Network::<f64>::build(&small(), 1).unwrap();
        let before = net.store().clone();
        let cfg = PretrainConfig { epochs: 0, ..quick() };
        let out = pretrain(&mut net, &windows(20, 0), &cfg, 9).unwrap();
        assert!(out.epoch_losses.is_empty());
        assert!(net.store().bit_eq(&before));
    }

    #[test]
    fn pretraining_is_deterministic_and_spares_the_head() {
        let data = windows(20, 1);
        let run = || {
            let mut net = Network::<f64>::build(&small(), 2).unwrap();
            let out = pretrain(&mut net, &data, &quick(), 5).unwrap();
            (net, out)
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert!(a.store().bit_eq(b.store()));
        assert_eq!(la, lb);
        assert_eq!(la.epoch_losses.len(), 2);

        let fresh = Network::<f64>::build(&small(), 2).unwrap();
        for e in fresh.store().entries() {
            let trained = a.store().get(&e.name).unwrap();
            if e.name.starts_with("head.") {
                assert!(trained.bit_eq(&e.tensor), "{}", e.name);
            }
        }
        assert!(!a.store().get("trunk.lift.weight").unwrap().bit_eq(fresh.store().get("trunk.lift.weight").unwrap()));
    }

    #[test]
    fn transfer_copies_trunk_and_keeps_head() {
        let mut source = Network::<f64>::build(&small(), 3).unwrap();
        pretrain(&mut source, &windows(16, 2), &quick(), 1).unwrap();
        let mut target = Network::<f64>::build(&small(), 4).unwrap();
        let head_before = target.store().get("head.fc1.weight").unwrap().clone();
        let copied = transfer(source.store(), &mut target).unwrap();
        assert!(copied > 0);

        let x = windows(3, 7);
        assert!(source.feature_map(&x).unwrap().bit_eq(&target.feature_map(&x).unwrap()));
        assert!(target.store().get("head.fc1.weight").unwrap().bit_eq(&head_before));
        let scratch_logits = Network::<f64>::build(&small(), 5).unwrap().logits(&x, Mode::Eval).unwrap();
        assert!(target.logits(&x, Mode::Eval).unwrap().max_abs_diff(&scratch_logits) > 1e-9);
    }

    #[test]
    fn transfer_rejects_other_architectures() {
        let source = Network::<f64>::build(&small(), 3).unwrap();
        let mut wider = Network::<f64>::build(&ModelConfig::EquiOnedcnn(Default::default()), 3).unwrap();
        let err = transfer(source.store(), &mut wider).unwrap_err().to_string();
        assert!(err.contains("trunk.lift.weight"), "{err}");

        let mut plain = Network::<f64>::build(&ModelConfig::Onedcnn(OneDcnnConfig::default()), 3).unwrap();
        let err = transfer(source.store(), &mut plain).unwrap_err().to_string();
        assert!(err.contains("missing from target"), "{err}");
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut net = Network::<f64>::build(&small(), 1).unwrap();
        let bad = PretrainConfig { temperature: 0.0, ..quick() };
        assert!(pretrain(&mut net, &windows(8, 0), &bad, 0).is_err());
        let bad = PretrainConfig { batch_size: 1, ..quick() };
        assert!(pretrain(&mut net, &windows(8, 0), &bad, 0).is_err());
    }
}
