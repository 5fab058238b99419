use crate::groupconv::{self, ProjectMode};
use crate::models::layers::{checked, BatchNorm, Bound, Conv, GConv, Head, Lift, Linear};
use crate::models::{EquiOneDcnnConfig, EquiResNetConfig, MlpConfig, ModelConfig, OneDcnnConfig, ParamStore};
use crate::numerics::{ops, Graph, Mode, Real, Tensor, Var};
use crate::rng::{self, streams};
use crate::{Error, Result, NUM_CLASSES, NUM_FEATURES, WINDOW_LEN};

#[derive(Clone, Debug)]
struct EquiOneDcnn {
    lift: Lift,
    lift_bn: BatchNorm,
    gconvs: Vec<(GConv, BatchNorm)>,
    projection: ProjectMode,
    pool_translation: bool,
    head: Head,
}

#[derive(Clone, Debug)]
struct ResBlock {
    conv1: GConv,
    bn1: BatchNorm,
    conv2: GConv,
    bn2: BatchNorm,
    skip: Option<GConv>,
}

impl ResBlock {
    fn new<T: Real>(
        store: &mut ParamStore<T>,
        rng: &mut impl rand::Rng,
        name: &str,
        c_in: usize,
        c_out: usize,
        cfg: &EquiResNetConfig,
        grid: groupconv::ScaleGrid,
    ) -> Self {
        let (k, s_k, pad, ctr) = (cfg.kernel_size, cfg.scale_offsets, cfg.padding, cfg.centre_kernels);
        let conv1 = GConv::new(store, rng, &format!("{name}.conv1"), c_in, c_out, s_k, k, grid, pad, ctr);
        let bn1 = BatchNorm::new(store, &format!("{name}.bn1"), c_out);
        let conv2 = GConv::new(store, rng, &format!("{name}.conv2"), c_out, c_out, s_k, k, grid, pad, ctr);
        let bn2 = BatchNorm::new(store, &format!("{name}.bn2"), c_out);
        let skip = (c_in != c_out).then(|| GConv::new(store, rng, &format!("{name}.skip"), c_in, c_out, 1, 1, grid, pad, ctr));
        Self {
            conv1,
            bn1,
            conv2,
            bn2,
            skip,
        }
    }

    /// `relu(bn(conv(relu(bn(conv(h)))))) + skip(h)`.
    fn forward<T: Real>(&self, g: &mut Graph<T>, p: &Bound, store: &mut ParamStore<T>, h: Var, mode: Mode) -> Result<Var> {
        let mut r = self.conv1.forward(g, p, h)?;
        r = self.bn1.forward(g, p, store, r, mode)?;
        r = ops::relu(g, r);
        r = self.conv2.forward(g, p, r)?;
        r = self.bn2.forward(g, p, store, r, mode)?;
        r = ops::relu(g, r);
        let skip = match &self.skip {
            Some(conv) => conv.forward(g, p, h)?,
            None => h,
        };
        ops::add(g, r, skip)
    }
}

/// One residual block on lifted features `[B, C_in, S, L] -> [B, C_out, S, L]`
/// with its own parameters (tensor names `block.*`).
#[derive(Clone, Debug)]
pub struct ResidualBlock<T: Real> {
    store: ParamStore<T>,
    block: ResBlock,
}

impl<T: Real> ResidualBlock<T> {
    /// Kernel size, scale grid, padding and centring come from `cfg`.
    pub fn new(c_in: usize, c_out: usize, cfg: &EquiResNetConfig, seed: u64) -> Result<Self> {
        let grid = cfg.validate()?;
        let mut rng = rng::stream(seed, streams::INIT);
        let mut store = ParamStore::new();
        let block = ResBlock::new(&mut store, &mut rng, "block", c_in, c_out, cfg, grid);
        Ok(Self { store, block })
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn forward(&mut self, g: &mut Graph<T>, x: Var, mode: Mode) -> Result<Var> {
        let mut p = vec![None; self.store.len()];
        for slot in self.store.param_slots() {
            p[slot] = Some(g.param(slot, self.store.tensor(slot).clone()));
        }
        self.block.forward(g, &p, &mut self.store, x, mode)
    }
}

#[derive(Clone, Debug)]
struct EquiResNet {
    lift: Lift,
    lift_bn: BatchNorm,
    blocks: Vec<ResBlock>,
    final_conv: GConv,
    final_bn: BatchNorm,
    projection: ProjectMode,
    head: Head,
}

#[derive(Clone, Debug)]
struct OneDcnn {
    convs: Vec<(Conv, BatchNorm)>,
    head: Head,
}

#[derive(Clone, Debug)]
struct Mlp {
    layers: Vec<(Linear, BatchNorm)>,
    head: Head,
}

#[derive(Clone, Debug)]
enum Arch {
    EquiOneDcnn(EquiOneDcnn),
    EquiResNet(EquiResNet),
    OneDcnn(OneDcnn),
    Mlp(Mlp),
}

/// A classifier: a trunk producing flat features (tensor names `trunk.*`)
/// followed by a dense head producing 17 logits (`head.*`).
#[derive(Clone, Debug)]
pub struct Network<T: Real> {
    config: ModelConfig,
    seed: u64,
    store: ParamStore<T>,
    arch: Arch,
    feature_dim: usize,
}

impl<T: Real> Network<T> {
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        match config {
            ModelConfig::EquiOnedcnn(c) => Self::equi_onedcnn(c, seed),
            ModelConfig::EquiResnet(c) => Self::equi_resnet(c, seed),
            ModelConfig::Onedcnn(c) => Self::onedcnn(c, seed),
            ModelConfig::Mlp(c) => Self::mlp(c, seed),
        }
    }

    pub fn equi_onedcnn(cfg: &EquiOneDcnnConfig, seed: u64) -> Result<Self> {
        let grid = cfg.validate()?;
        let mut rng = rng::stream(seed, streams::INIT);
        let mut head_rng = rng::stream(seed, streams::HEAD_INIT);
        let mut store = ParamStore::new();
        let (k, pad) = (cfg.kernel_size, cfg.padding);

        let lift = Lift::new(&mut store, &mut rng, "trunk.lift", NUM_FEATURES, cfg.lift_channels, k, grid, pad, cfg.centre_kernels);
        let lift_bn = BatchNorm::new(&mut store, "trunk.lift_bn", cfg.lift_channels);
        let mut gconvs = Vec::new();
        let mut c_in = cfg.lift_channels;
        for (i, &c_out) in cfg.gconv_channels.iter().enumerate() {
            let name = format!("trunk.gconv{}", i + 1);
            let conv = GConv::new(&mut store, &mut rng, &name, c_in, c_out, cfg.scale_offsets, k, grid, pad, cfg.centre_kernels);
            let bn = BatchNorm::new(&mut store, &format!("{name}_bn"), c_out);
            gconvs.push((conv, bn));
            c_in = c_out;
        }
        let feature_dim = if cfg.pool_translation { c_in } else { c_in * WINDOW_LEN };
        let head = Head::new(
            &mut store,
            &mut head_rng,
            "head",
            feature_dim,
            &cfg.head_hidden,
            NUM_CLASSES,
            cfg.zero_init_head,
        );
        let arch = Arch::EquiOneDcnn(EquiOneDcnn {
            lift,
            lift_bn,
            gconvs,
            projection: cfg.projection,
            pool_translation: cfg.pool_translation,
            head,
        });
        Ok(Self {
            config: ModelConfig::EquiOnedcnn(cfg.clone()),
            seed,
            store,
            arch,
            feature_dim,
        })
    }

    pub fn equi_resnet(cfg: &EquiResNetConfig, seed: u64) -> Result<Self> {
        let grid = cfg.validate()?;
        let mut rng = rng::stream(seed, streams::INIT);
        let mut head_rng = rng::stream(seed, streams::HEAD_INIT);
        let mut store = ParamStore::new();
        let (k, s_k, pad, ctr) = (cfg.kernel_size, cfg.scale_offsets, cfg.padding, cfg.centre_kernels);

        let c0 = cfg.channels[0];
        let lift = Lift::new(&mut store, &mut rng, "trunk.lift", NUM_FEATURES, c0, k, grid, pad, ctr);
        let lift_bn = BatchNorm::new(&mut store, "trunk.lift_bn", c0);
        let mut blocks = Vec::new();
        let mut c_in = c0;
        for (s, (&n, &c_out)) in cfg.blocks.iter().zip(&cfg.channels).enumerate() {
            for b in 0..n {
                let name = format!("trunk.stage{}.block{}", s + 1, b + 1);
                blocks.push(ResBlock::new(&mut store, &mut rng, &name, c_in, c_out, cfg, grid));
                c_in = c_out;
            }
        }
        let final_conv = GConv::new(&mut store, &mut rng, "trunk.final", c_in, c_in, s_k, k, grid, pad, ctr);
        let final_bn = BatchNorm::new(&mut store, "trunk.final_bn", c_in);
        let feature_dim = c_in * WINDOW_LEN;
        let head = Head::new(&mut store, &mut head_rng, "head", feature_dim, &[], NUM_CLASSES, cfg.zero_init_head);
        let arch = Arch::EquiResNet(EquiResNet {
            lift,
            lift_bn,
            blocks,
            final_conv,
            final_bn,
            projection: cfg.projection,
            head,
        });
        Ok(Self {
            config: ModelConfig::EquiResnet(cfg.clone()),
            seed,
            store,
            arch,
            feature_dim,
        })
    }

    pub fn onedcnn(cfg: &OneDcnnConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::stream(seed, streams::INIT);
        let mut head_rng = rng::stream(seed, streams::HEAD_INIT);
        let mut store = ParamStore::new();
        let mut convs = Vec::new();
        let mut c_in = NUM_FEATURES;
        for (i, &c_out) in cfg.conv_channels.iter().enumerate() {
            let name = format!("trunk.conv{}", i + 1);
            let conv = Conv::new(&mut store, &mut rng, &name, c_in, c_out, cfg.kernel_size, cfg.padding, cfg.centre_kernels);
            let bn = BatchNorm::new(&mut store, &format!("{name}_bn"), c_out);
            convs.push((conv, bn));
            c_in = c_out;
        }
        let feature_dim = c_in * WINDOW_LEN;
        let head = Head::new(
            &mut store,
            &mut head_rng,
            "head",
            feature_dim,
            &cfg.head_hidden,
            NUM_CLASSES,
            cfg.zero_init_head,
        );
        Ok(Self {
            config: ModelConfig::Onedcnn(cfg.clone()),
            seed,
            store,
            arch: Arch::OneDcnn(OneDcnn { convs, head }),
            feature_dim,
        })
    }

    pub fn mlp(cfg: &MlpConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::stream(seed, streams::INIT);
        let mut head_rng = rng::stream(seed, streams::HEAD_INIT);
        let mut store = ParamStore::new();
        let mut layers = Vec::new();
        let mut width = NUM_FEATURES * WINDOW_LEN;
        for (i, &h) in cfg.hidden.iter().enumerate() {
            let name = format!("trunk.fc{}", i + 1);
            let lin = Linear::new(&mut store, &mut rng, &name, width, h, false);
            let bn = BatchNorm::new(&mut store, &format!("trunk.bn{}", i + 1), h);
            layers.push((lin, bn));
            width = h;
        }
        let head = Head::new(&mut store, &mut head_rng, "head", width, &[], NUM_CLASSES, cfg.zero_init_head);
        Ok(Self {
            config: ModelConfig::Mlp(cfg.clone()),
            seed,
            store,
            arch: Arch::Mlp(Mlp { layers, head }),
            feature_dim: width,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_parameters()
    }

    /// Width of the flat trunk output consumed by the head.
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Binds every parameter to a fresh graph leaf; buffers stay unbound.
    pub fn bind(&self, g: &mut Graph<T>) -> Vec<Option<Var>> {
        let mut out = vec![None; self.store.len()];
        for slot in self.store.param_slots() {
            out[slot] = Some(g.param(slot, self.store.tensor(slot).clone()));
        }
        out
    }

    fn check_input(&self, g: &Graph<T>, x: Var) -> Result<()> {
        let shape = g.shape(x);
        let ok = match self.arch {
            Arch::Mlp(_) => {
                shape.len() >= 2 && shape[1..].iter().product::<usize>() == NUM_FEATURES * WINDOW_LEN
            }
            _ => shape.len() == 3 && shape[1] == NUM_FEATURES && shape[2] == WINDOW_LEN,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{} expects windows of shape [B, {NUM_FEATURES}, {WINDOW_LEN}], got {shape:?}",
                self.config.name()
            )))
        }
    }

    /// Trunk output before flattening: `[B, C, L]` for the convolutional
    /// models (scale axis already projected), `[B, C]` for the MLP or when
    /// positions are pooled.
    pub fn trunk_bound(&mut self, g: &mut Graph<T>, p: &Bound, x: Var, mode: Mode) -> Result<Var> {
        self.check_input(g, x)?;
        let store = &mut self.store;
        match &self.arch {
            Arch::EquiOneDcnn(net) => {
                let mut h = net.lift.forward(g, p, x)?;
                h = net.lift_bn.forward(g, p, store, h, mode)?;
                h = ops::relu(g, h);
                for (conv, bn) in &net.gconvs {
                    h = conv.forward(g, p, h)?;
                    h = bn.forward(g, p, store, h, mode)?;
                    h = ops::relu(g, h);
                }
                h = groupconv::project(g, h, net.projection)?;
                if net.pool_translation {
                    h = ops::max_axis(g, h, 2)?;
                }
                Ok(h)
            }
            Arch::EquiResNet(net) => {
                let mut h = net.lift.forward(g, p, x)?;
                h = net.lift_bn.forward(g, p, store, h, mode)?;
                h = ops::relu(g, h);
                for block in &net.blocks {
                    h = block.forward(g, p, store, h, mode)?;
                }
                h = net.final_conv.forward(g, p, h)?;
                h = net.final_bn.forward(g, p, store, h, mode)?;
                h = ops::relu(g, h);
                groupconv::project(g, h, net.projection)
            }
            Arch::OneDcnn(net) => {
                let mut h = x;
                for (conv, bn) in &net.convs {
                    h = conv.forward(g, p, h)?;
                    h = bn.forward(g, p, store, h, mode)?;
                    h = ops::relu(g, h);
                }
                Ok(h)
            }
            Arch::Mlp(net) => {
                let mut h = ops::flatten(g, x)?;
                for (lin, bn) in &net.layers {
                    h = lin.forward(g, p, h)?;
                    h = ops::relu(g, h);
                    h = bn.forward(g, p, store, h, mode)?;
                }
                Ok(h)
            }
        }
    }

    /// Flat trunk features `[B, feature_dim]`.
    pub fn features_bound(&mut self, g: &mut Graph<T>, p: &Bound, x: Var, mode: Mode) -> Result<Var> {
        let h = self.trunk_bound(g, p, x, mode)?;
        let f = ops::flatten(g, h)?;
        checked(g, f, "trunk")
    }

    pub fn head_bound(&self, g: &mut Graph<T>, p: &Bound, features: Var) -> Result<Var> {
        let head = match &self.arch {
            Arch::EquiOneDcnn(n) => &n.head,
            Arch::EquiResNet(n) => &n.head,
            Arch::OneDcnn(n) => &n.head,
            Arch::Mlp(n) => &n.head,
        };
        head.forward(g, p, features)
    }

    pub fn forward_bound(&mut self, g: &mut Graph<T>, p: &Bound, x: Var, mode: Mode) -> Result<Var> {
        let f = self.features_bound(g, p, x, mode)?;
        self.head_bound(g, p, f)
    }

    /// Logits `[B, 17]` recorded on `g`, with parameters bound as leaves.
    pub fn forward(&mut self, g: &mut Graph<T>, x: Var, mode: Mode) -> Result<Var> {
        let p = self.bind(g);
        self.forward_bound(g, &p, x, mode)
    }

    /// Logits for a batch without keeping the tape.
    pub fn logits(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.input(x.clone());
        let y = self.forward(&mut g, xv, mode)?;
        Ok(g.value(y).clone())
    }

    /// Pre-head feature map for a batch (eval mode).
    pub fn feature_map(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let p = self.bind(&mut g);
        let xv = g.input(x.clone());
        let y = self.trunk_bound(&mut g, &p, xv, Mode::Eval)?;
        Ok(g.value(y).clone())
    }

    /// Eval-mode class predictions.
    pub fn predict(&mut self, x: &Tensor<T>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.logits(x, Mode::Eval)?))
    }
}

/// Row-wise argmax of a `[B, K]` tensor; ties go to the smallest index.
pub fn argmax_rows<T: Real>(logits: &Tensor<T>) -> Vec<usize> {
    let k = logits.dim(logits.rank() - 1);
    logits
        .data()
        .chunks(k)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
