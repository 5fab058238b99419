use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contrastive::PretrainConfig;
use crate::data::{load_csv, synthesize, windowize, SyntheticConfig, Windows};
use crate::harness::TrainOptions;
use crate::metrics::DEFAULT_KS;
use crate::models::ModelConfig;
use crate::numerics::AdamConfig;
use crate::{Error, Result};

/// Where a run reads its windows from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv { path: PathBuf },
    Synthetic(SyntheticConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticConfig::default())
    }
}

impl DataSource {
    /// Reads and windows the track. Relative CSV paths resolve against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<Windows> {
        let track = match self {
            DataSource::Csv { path } => match base {
                Some(dir) if path.is_relative() => load_csv(dir.join(path))?,
                _ => load_csv(path)?,
            },
            DataSource::Synthetic(cfg) => synthesize(cfg)?,
        };
        windowize(&track)
    }
}

/// Everything that determines a training, pre-training or cross-validation
/// run. Serialized as TOML; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Defaults to 400 for convolutional models and 200 for the MLP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSource,
    /// Trunk weights copied into every model before supervised training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrain_checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub pretrain: PretrainConfig,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    /// Standardize with statistics of the whole dataset instead of the
    /// training fold.
    #[serde(default)]
    pub global_standardization: bool,
}

fn default_batch_size() -> usize {
    1024
}

fn default_ks() -> Vec<usize> {
    DEFAULT_KS.to_vec()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            optimizer: AdamConfig::default(),
            batch_size: default_batch_size(),
            epochs: None,
            seed: 0,
            data: DataSource::default(),
            pretrain_checkpoint: None,
            pretrain: PretrainConfig::default(),
            ks: default_ks(),
            global_standardization: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        match &self.model {
            ModelConfig::EquiOnedcnn(c) => c.validate().map(drop)?,
            ModelConfig::EquiResnet(c) => c.validate().map(drop)?,
            ModelConfig::Onedcnn(c) => c.validate()?,
            ModelConfig::Mlp(c) => c.validate()?,
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        self.pretrain.validate()
    }

    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or_else(|| self.model.default_epochs())
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs(),
            batch_size: self.batch_size,
            optimizer: self.optimizer,
        }
    }

    /// First eight bytes (little-endian) of the SHA-256 of the canonical
    /// JSON form.
    pub fn hash(&self) -> u64 {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
    }
}
