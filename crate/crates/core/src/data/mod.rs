//! Along-track records, standardization, window slicing, cross-validation
//! splits and a synthetic track generator.

mod split;
mod standardize;
mod synth;
mod track;
mod windows;

pub use split::{kfold_5x2, Split};
pub use standardize::{standardize, StandardizationStats};
pub use synth::{synthesize, SyntheticConfig};
pub use track::{load_csv, save_csv, AltimetryTrack, CSV_HEADER, FEATURE_NAMES};
pub use windows::{flatten, windowize, WindowSample, Windows};
