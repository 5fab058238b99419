//! Network builders mapping a `(6 x 16)` window to 17 class logits.

mod config;
mod layers;
mod network;
mod params;

pub use config::{EquiOneDcnnConfig, EquiResNetConfig, MlpConfig, ModelConfig, OneDcnnConfig};
pub use network::{argmax_rows, Network, ResidualBlock};
pub use params::{EntryKind, ParamStore};
