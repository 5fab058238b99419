use serde::{Deserialize, Serialize};

use crate::groupconv::{ProjectMode, ScaleGrid};
use crate::numerics::Padding;
use crate::{Error, Result};

fn positive(name: &str, values: &[usize]) -> Result<()> {
    if values.is_empty() || values.contains(&0) {
        return Err(Error::Config(format!("{name} must be a non-empty list of positive sizes, got {values:?}")));
    }
    Ok(())
}

fn scale_grid(num_scales: usize, scale_offsets: usize) -> Result<ScaleGrid> {
    let grid = ScaleGrid::new(num_scales).map_err(|e| Error::Config(e.to_string()))?;
    if scale_offsets == 0 || scale_offsets > num_scales {
        return Err(Error::Config(format!(
            "scale_offsets must be in 1..={num_scales}, got {scale_offsets}"
        )));
    }
    Ok(grid)
}

/// Lifting layer, group convolutions, scale projection and an MLP head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquiOneDcnnConfig {
    pub lift_channels: usize,
    pub gconv_channels: Vec<usize>,
    pub kernel_size: usize,
    pub num_scales: usize,
    /// Scale extent `S_k` of the group-convolution kernels.
    pub scale_offsets: usize,
    pub head_hidden: Vec<usize>,
    pub padding: Padding,
    pub projection: ProjectMode,
    /// Also max-pool over positions before the head, making the logits
    /// invariant to circular shifts (used for invariance checks).
    pub pool_translation: bool,
    /// Roll each scale's response to its kernel centre after every layer.
    pub centre_kernels: bool,
    pub zero_init_head: bool,
}

impl Default for EquiOneDcnnConfig {
    fn default() -> Self {
        Self {
            lift_channels: 16,
            gconv_channels: vec![32, 32],
            kernel_size: 3,
            num_scales: 3,
            scale_offsets: 2,
            head_hidden: vec![64],
            padding: Padding::Circular,
            projection: ProjectMode::Max,
            pool_translation: false,
            centre_kernels: true,
            zero_init_head: false,
        }
    }
}

impl EquiOneDcnnConfig {
    pub fn validate(&self) -> Result<ScaleGrid> {
        positive("lift_channels", &[self.lift_channels])?;
        positive("gconv_channels", &self.gconv_channels)?;
        positive("kernel_size", &[self.kernel_size])?;
        if self.head_hidden.contains(&0) {
            return Err(Error::Config("head_hidden sizes must be positive".into()));
        }
        scale_grid(self.num_scales, self.scale_offsets)
    }
}

/// Residual network on the lifted domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquiResNetConfig {
    pub blocks: Vec<usize>,
    pub channels: Vec<usize>,
    pub kernel_size: usize,
    pub num_scales: usize,
    pub scale_offsets: usize,
    pub padding: Padding,
    pub projection: ProjectMode,
    pub centre_kernels: bool,
    pub zero_init_head: bool,
}

impl Default for EquiResNetConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl EquiResNetConfig {
    /// One block per stage; fast enough for desk-scale runs.
    pub fn desk() -> Self {
        Self {
            blocks: vec![1, 1, 1, 1],
            channels: vec![16, 32, 64, 128],
            kernel_size: 3,
            num_scales: 3,
            scale_offsets: 2,
            padding: Padding::Circular,
            projection: ProjectMode::Max,
            centre_kernels: true,
            zero_init_head: false,
        }
    }

    /// ResNet-50 stage depths.
    pub fn full() -> Self {
        Self {
            blocks: vec![3, 4, 6, 3],
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<ScaleGrid> {
        positive("blocks", &self.blocks)?;
        positive("channels", &self.channels)?;
        positive("kernel_size", &[self.kernel_size])?;
        if self.blocks.len() != self.channels.len() {
            return Err(Error::Config(format!(
                "{} stage block counts but {} stage channel widths",
                self.blocks.len(),
                self.channels.len()
            )));
        }
        if self.channels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("stage channels must be non-decreasing".into()));
        }
        scale_grid(self.num_scales, self.scale_offsets)
    }
}

/// Plain-convolution counterpart of [`EquiOneDcnnConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneDcnnConfig {
    pub conv_channels: Vec<usize>,
    pub kernel_size: usize,
    pub head_hidden: Vec<usize>,
    pub padding: Padding,
    pub centre_kernels: bool,
    pub zero_init_head: bool,
}

impl Default for OneDcnnConfig {
    fn default() -> Self {
        Self::matched(&EquiOneDcnnConfig::default())
    }
}

impl OneDcnnConfig {
    /// Same channel widths, kernel size and head as the equivariant model.
    pub fn matched(equi: &EquiOneDcnnConfig) -> Self {
        let mut conv_channels = vec![equi.lift_channels];
        conv_channels.extend(&equi.gconv_channels);
        Self {
            conv_channels,
            kernel_size: equi.kernel_size,
            head_hidden: equi.head_hidden.clone(),
            padding: equi.padding,
            centre_kernels: equi.centre_kernels,
            zero_init_head: equi.zero_init_head,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("conv_channels", &self.conv_channels)?;
        positive("kernel_size", &[self.kernel_size])?;
        if self.head_hidden.contains(&0) {
            return Err(Error::Config("head_hidden sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Dense baseline on the flattened 96-value window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub zero_init_head: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256, 128, 64],
            zero_init_head: false,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        positive("hidden", &self.hidden)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    EquiOnedcnn(EquiOneDcnnConfig),
    EquiResnet(EquiResNetConfig),
    Onedcnn(OneDcnnConfig),
    Mlp(MlpConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::EquiOnedcnn(EquiOneDcnnConfig::default())
    }
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::EquiOnedcnn(_) => "EquiOneDCNN",
            ModelConfig::EquiResnet(_) => "EquiResNet",
            ModelConfig::Onedcnn(_) => "OneDCNN",
            ModelConfig::Mlp(_) => "MLP",
        }
    }

    /// Training epochs used when a run does not set them.
    pub fn default_epochs(&self) -> usize {
        match self {
            ModelConfig::Mlp(_) => 200,
            _ => 400,
        }
    }

    pub fn set_zero_init_head(&mut self, on: bool) {
        match self {
            ModelConfig::EquiOnedcnn(c) => c.zero_init_head = on,
            ModelConfig::EquiResnet(c) => c.zero_init_head = on,
            ModelConfig::Onedcnn(c) => c.zero_init_head = on,
            ModelConfig::Mlp(c) => c.zero_init_head = on,
        }
    }
}
