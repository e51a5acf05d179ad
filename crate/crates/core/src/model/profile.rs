//! Transfer profiles: architecture presets whose leading layers carry fixed,
//! seed-derived weights.
//!
//! Profiles are stored as TOML:
//!
//! ```toml
//! name = "desk"
//! seed = 7
//! frozen_prefix = 2
//!
//! [[layer]]
//! kind = "separable_conv"
//! kernel = 3
//! channels = 4
//!
//! [[layer]]
//! kind = "dense"
//! units = 8
//! activation = "relu"
//! ```
//!
//! The output layer (dense, one unit per class, softmax) is implied.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
    Maxout,
}

fn default_pieces() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Depthwise 1-D convolution ("same" zero padding) followed by a pointwise
    /// channel mix with bias and ReLU; optionally adds the block input back.
    SeparableConv {
        kernel: usize,
        channels: usize,
        #[serde(default)]
        residual: bool,
    },
    MaxPool {
        width: usize,
    },
    AvgPool {
        width: usize,
    },
    Dense {
        units: usize,
        #[serde(default)]
        activation: Activation,
        /// Affine pieces per unit when `activation = "maxout"`.
        #[serde(default = "default_pieces")]
        pieces: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferProfile {
    pub name: String,
    pub seed: u64,
    /// Number of leading layers whose weights are fixed by `seed`.
    #[serde(default)]
    pub frozen_prefix: usize,
    #[serde(default, rename = "layer")]
    pub layers: Vec<LayerSpec>,
}

impl TransferProfile {
    /// Two 2-channel separable-convolution blocks (the second residual), a
    /// ReLU dense layer of 4 units, and the implied output layer. The
    /// convolution blocks are frozen.
    pub fn desk() -> Self {
        Self {
            name: "desk".into(),
            seed: 7,
            frozen_prefix: 2,
            layers: vec![
                LayerSpec::SeparableConv {
                    kernel: 3,
                    channels: 2,
                    residual: false,
                },
                LayerSpec::SeparableConv {
                    kernel: 3,
                    channels: 2,
                    residual: true,
                },
                LayerSpec::Dense {
                    units: 4,
                    activation: Activation::Relu,
                    pieces: 2,
                },
            ],
        }
    }

    /// Output layer only: softmax regression.
    pub fn linear() -> Self {
        Self {
            name: "linear".into(),
            seed: 0,
            frozen_prefix: 0,
            layers: Vec::new(),
        }
    }

    /// Built-in profile by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "linear" => Some(Self::linear()),
            _ => None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Config(format!("profile: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.frozen_prefix > self.layers.len() {
            return Err(Error::Config(format!(
                "frozen prefix {} exceeds {} layers",
                self.frozen_prefix,
                self.layers.len()
            )));
        }
        for l in &self.layers {
            let ok = match *l {
                LayerSpec::SeparableConv { kernel, channels, .. } => kernel >= 1 && channels >= 1,
                LayerSpec::MaxPool { width } | LayerSpec::AvgPool { width } => width >= 1,
                LayerSpec::Dense { units, activation, pieces } => {
                    units >= 1 && (activation != Activation::Maxout || pieces >= 1)
                }
            };
            if !ok {
                return Err(Error::Config(format!("layer {l:?} has a zero dimension")));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("profile serializes");
        Sha256::digest(&json)
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
