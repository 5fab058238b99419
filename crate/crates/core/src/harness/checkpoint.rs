//! Binary checkpoint format. All integers are little-endian.
//!
//! ```text
//! "STEC"  u32 version  u64 config_hash  u64 seed  u8 stage  u32 count
//! count x { u32 name_len  name (UTF-8)  u8 dtype  u32 rank  rank x u64 dim  payload }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::StandardizationStats;
use crate::models::{Network, ParamStore};
use crate::numerics::{DType, Real, Tensor};
use crate::{Error, Result, NUM_FEATURES};

pub const MAGIC: &[u8; 4] = b"STEC";
pub const FORMAT_VERSION: u32 = 1;

/// Prefix of tensors that carry data statistics rather than model weights.
const DATA_PREFIX: &str = "data.";
const STATS_MEAN: &str = "data.mean";
const STATS_STD: &str = "data.std";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pretrain = 1,
    Supervised = 2,
}

impl Stage {
    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Stage::Pretrain),
            2 => Some(Stage::Supervised),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: u64,
    pub seed: u64,
    pub stage: Stage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    /// Little-endian element bytes.
    payload: Vec<u8>,
}

impl NamedTensor {
    pub fn new<T: Real>(name: impl Into<String>, t: &Tensor<T>) -> Self {
        let mut payload = Vec::with_capacity(t.len() * T::DTYPE.size());
        for &v in t.data() {
            v.write_le(&mut payload);
        }
        Self {
            name: name.into(),
            dtype: T::DTYPE,
            shape: t.shape().to_vec(),
            payload,
        }
    }

    /// Decodes the payload; the stored dtype must be `T`'s.
    pub fn to_tensor<T: Real>(&self) -> Result<Tensor<T>> {
        if self.dtype != T::DTYPE {
            return Err(Error::Checkpoint(format!(
                "tensor {} is stored as {:?}, requested {:?}",
                self.name,
                self.dtype,
                T::DTYPE
            )));
        }
        let data = self.payload.chunks_exact(self.dtype.size()).map(T::read_le).collect();
        Tensor::new(&self.shape, data)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub provenance: Provenance,
    pub tensors: Vec<NamedTensor>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Checkpoint(format!("truncated file while reading {what} at byte {}", self.pos))),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    /// Every tensor of `store`, parameters and buffers alike.
    pub fn from_store<T: Real>(store: &ParamStore<T>, provenance: Provenance) -> Self {
        Self {
            provenance,
            tensors: store.entries().iter().map(|e| NamedTensor::new(&e.name, &e.tensor)).collect(),
        }
    }

    /// Attaches the standardization statistics the model was trained with.
    pub fn with_stats(mut self, stats: &StandardizationStats) -> Self {
        self.tensors.retain(|t| t.name != STATS_MEAN && t.name != STATS_STD);
        let n = stats.mean.len();
        for (name, values) in [(STATS_MEAN, &stats.mean), (STATS_STD, &stats.std)] {
            let t = Tensor::<f64>::new(&[n], values.clone()).expect("stats vector");
            self.tensors.push(NamedTensor::new(name, &t));
        }
        self
    }

    pub fn stats(&self) -> Result<Option<StandardizationStats>> {
        let (Some(mean), Some(std)) = (self.get(STATS_MEAN), self.get(STATS_STD)) else {
            return Ok(None);
        };
        let (mean, std) = (mean.to_tensor::<f64>()?, std.to_tensor::<f64>()?);
        if mean.shape() != [NUM_FEATURES] || std.shape() != [NUM_FEATURES] {
            return Err(Error::Checkpoint(format!("standardization statistics must hold {NUM_FEATURES} values")));
        }
        Ok(Some(StandardizationStats {
            mean: mean.into_data(),
            std: std.into_data(),
        }))
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    fn model_tensors(&self) -> impl Iterator<Item = &NamedTensor> {
        self.tensors.iter().filter(|t| !t.name.starts_with(DATA_PREFIX))
    }

    /// Model tensors as a store, e.g. as the source of a trunk transfer.
    pub fn to_store<T: Real>(&self) -> Result<ParamStore<T>> {
        let mut store = ParamStore::new();
        for t in self.model_tensors() {
            store.add_param(t.name.clone(), t.to_tensor::<T>()?);
        }
        Ok(store)
    }

    /// Overwrites every tensor of `net`. The checkpoint must hold exactly the
    /// model's tensor names with matching shapes and dtype.
    pub fn load_into<T: Real>(&self, net: &mut Network<T>) -> Result<()> {
        let mut decoded = Vec::new();
        for t in self.model_tensors() {
            let Some(current) = net.store().get(&t.name) else {
                return Err(Error::Checkpoint(format!("unknown tensor {} for this model", t.name)));
            };
            let tensor = t.to_tensor::<T>()?;
            if tensor.shape() != current.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {}: checkpoint shape {:?}, model shape {:?}",
                    t.name,
                    tensor.shape(),
                    current.shape()
                )));
            }
            decoded.push((t.name.as_str(), tensor));
        }
        if let Some(e) = net.store().entries().iter().find(|e| self.get(&e.name).is_none()) {
            return Err(Error::Checkpoint(format!("tensor {} missing from checkpoint", e.name)));
        }
        for (name, tensor) in decoded {
            net.store_mut().assign(name, tensor)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.provenance.config_hash.to_le_bytes());
        out.extend_from_slice(&self.provenance.seed.to_le_bytes());
        out.push(self.provenance.stage as u8);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.dtype.code());
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            out.extend_from_slice(&t.payload);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let mut r = Reader { bytes, pos: MAGIC.len() };
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        let config_hash = r.u64("config hash")?;
        let seed = r.u64("seed")?;
        let code = r.u8("stage")?;
        let stage = Stage::from_code(code).ok_or_else(|| Error::Checkpoint(format!("unknown stage code {code}")))?;
        let count = r.u32("tensor count")?;
        let mut tensors = Vec::new();
        for _ in 0..count {
            let len = r.u32("name length")? as usize;
            let name = std::str::from_utf8(r.take(len, "name")?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
                .to_string();
            let code = r.u8("dtype")?;
            let dtype = DType::from_code(code)
                .ok_or_else(|| Error::Checkpoint(format!("tensor {name}: unknown dtype code {code}")))?;
            let rank = r.u32("rank")? as usize;
            let mut shape = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                shape.push(r.u64("dimension")? as usize);
            }
            let bytes_len = shape
                .iter()
                .try_fold(dtype.size(), |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Checkpoint(format!("tensor {name}: shape {shape:?} overflows")))?;
            let payload = r.take(bytes_len, &name)?.to_vec();
            tensors.push(NamedTensor {
                name,
                dtype,
                shape,
                payload,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self {
            provenance: Provenance {
                config_hash,
                seed,
                stage,
            },
            tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(msg) => Error::Checkpoint(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{EquiOneDcnnConfig, ModelConfig, OneDcnnConfig};
    use crate::numerics::Mode;
    use rand::Rng;

    fn small_equi() -> ModelConfig {
        ModelConfig::EquiOnedcnn(EquiOneDcnnConfig {
            lift_channels: 4,
            gconv_channels: vec![6],
            head_hidden: vec![8],
            ..Default::default()
        })
    }

    fn prov(stage: Stage) -> Provenance {
        Provenance {
            config_hash: 0xDEAD_BEEF_0123_4567,
            seed: 42,
            stage,
        }
    }

    fn stats() -> StandardizationStats {
        StandardizationStats {
            mean: vec![1.0, 2.0, 3.0, 4.0, 5.0, 0.1],
            std: vec![0.5, 1e-3, 2.0, 0.25, 3.0, 7.0],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Network::<f32>::build(&small_equi(), 3).unwrap();
        let ck = Checkpoint::from_store(net.store(), prov(Stage::Supervised)).with_stats(&stats());
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.provenance, prov(Stage::Supervised));
        assert_eq!(back.stats().unwrap(), Some(stats()));

        let mut other = Network::<f32>::build(&small_equi(), 99).unwrap();
        assert!(!other.store().bit_eq(net.store()));
        back.load_into(&mut other).unwrap();
        assert!(other.store().bit_eq(net.store()));
    }

    #[test]
    fn loaded_model_gives_identical_outputs() {
        let mut net = Network::<f64>::build(&small_equi(), 5).unwrap();
        let mut rng = crate::rng::stream(1, 0);
        let x = Tensor::from_fn(&[3, 6, 16], |_| rng.random_range(-2.0..2.0));
        let before = net.logits(&x, Mode::Eval).unwrap();
        let bytes = Checkpoint::from_store(net.store(), prov(Stage::Supervised)).to_bytes();
        let mut fresh = Network::<f64>::build(&small_equi(), 6).unwrap();
        Checkpoint::from_bytes(&bytes).unwrap().load_into(&mut fresh).unwrap();
        assert!(fresh.logits(&x, Mode::Eval).unwrap().bit_eq(&before));
    }

    #[test]
    fn header_layout() {
        let net = Network::<f32>::build(&small_equi(), 3).unwrap();
        let bytes = Checkpoint::from_store(net.store(), prov(Stage::Pretrain)).to_bytes();
        assert_eq!(&bytes[..4], b"STEC");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), FORMAT_VERSION);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 0xDEAD_BEEF_0123_4567);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 42);
        assert_eq!(bytes[24], 1);
        assert_eq!(u32::from_le_bytes(bytes[25..29].try_into().unwrap()) as usize, net.store().len());
    }

    #[test]
    fn corrupted_magic() {
        let net = Network::<f32>::build(&small_equi(), 3).unwrap();
        let mut bytes = Checkpoint::from_store(net.store(), prov(Stage::Pretrain)).to_bytes();
        bytes[0] = b'X';
        let err = Checkpoint::from_bytes(&bytes).unwrap_err().to_string();
        assert!(err.contains("not a checkpoint"), "{err}");
        assert!(Checkpoint::from_bytes(b"").unwrap_err().to_string().contains("not a checkpoint"));
    }

    #[test]
    fn version_mismatch_and_truncation() {
        let net = Network::<f32>::build(&small_equi(), 3).unwrap();
        let good = Checkpoint::from_store(net.store(), prov(Stage::Pretrain)).to_bytes();
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(Checkpoint::from_bytes(&bad).unwrap_err().to_string().contains("version 9"));
        for cut in [5, 20, 30, good.len() / 2, good.len() - 1] {
            let err = Checkpoint::from_bytes(&good[..cut]).unwrap_err().to_string();
            assert!(err.contains("truncated"), "{cut}: {err}");
        }
        let mut long = good;
        long.push(0);
        assert!(Checkpoint::from_bytes(&long).unwrap_err().to_string().contains("trailing"));
    }

    #[test]
    fn mismatched_model_names_the_tensor() {
        let equi = Network::<f32>::build(&small_equi(), 3).unwrap();
        let ck = Checkpoint::from_store(equi.store(), prov(Stage::Pretrain));
        let mut plain = Network::<f32>::build(&ModelConfig::Onedcnn(OneDcnnConfig::default()), 3).unwrap();
        let err = ck.load_into(&mut plain).unwrap_err().to_string();
        assert!(err.contains("trunk.lift"), "{err}");

        let wider = ModelConfig::EquiOnedcnn(EquiOneDcnnConfig {
            lift_channels: 5,
            gconv_channels: vec![6],
            head_hidden: vec![8],
            ..Default::default()
        });
        let mut net = Network::<f32>::build(&wider, 3).unwrap();
        let err = ck.load_into(&mut net).unwrap_err().to_string();
        assert!(err.contains("trunk.lift"), "{err}");
    }

    #[test]
    fn dtype_is_checked() {
        let net = Network::<f32>::build(&small_equi(), 3).unwrap();
        let ck = Checkpoint::from_store(net.store(), prov(Stage::Supervised));
        let mut wide = Network::<f64>::build(&small_equi(), 3).unwrap();
        assert!(ck.load_into(&mut wide).unwrap_err().to_string().contains("F32"));
        assert_eq!(ck.to_store::<f32>().unwrap().len(), net.store().len());
    }
}
