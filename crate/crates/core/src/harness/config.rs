//! Experiment configuration, read from TOML.
//!
//! ```toml
//! dataset = "data/cbc.csv"
//! seeds = [1, 2, 3]
//!
//! [qnorm]
//! strategy = "all"
//!
//! [fusion]
//! fused_count = 8
//!
//! [classifier]
//! profile = "desk"
//!
//! [protocol]
//! learning_sets = [0.9]
//! k_values = [3, 9]
//! ```
//!
//! Without `dataset`, a `[synthetic]` table selects the built-in synthetic
//! cohort. `ptso.seed` is ignored; every stage seed derives from the run seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::OversampleConfig;
use crate::error::{Error, Result};
use crate::fusion::dmn::DmnTrainConfig;
use crate::fusion::AlphaConfig;
use crate::model::TransferProfile;
use crate::optim::PtsoConfig;
use crate::qnorm::StrategyKind;
use crate::tabular::{self, Dataset, LoadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSource {
    pub rows: usize,
    pub carrier_share: f64,
    pub seed: u64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        Self {
            rows: 288,
            carrier_share: 0.55,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QnormSettings {
    pub strategy: StrategyKind,
}

impl Default for QnormSettings {
    fn default() -> Self {
        Self {
            strategy: StrategyKind::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionSettings {
    /// Fused width `e`; `⌈c/2⌉` when absent.
    pub fused_count: Option<usize>,
    pub depth: usize,
    pub hidden_width: usize,
    pub pieces: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for FusionSettings {
    fn default() -> Self {
        let a = AlphaConfig::default();
        Self {
            fused_count: None,
            depth: a.depth,
            hidden_width: a.hidden_width,
            pieces: a.pieces,
            epochs: a.train.epochs,
            learning_rate: a.train.learning_rate,
            batch_size: a.train.batch_size,
        }
    }
}

impl FusionSettings {
    pub fn fused_count_for(&self, features: usize) -> usize {
        self.fused_count.unwrap_or(features.div_ceil(2))
    }

    pub fn alpha_config(&self, seed: u64) -> AlphaConfig {
        AlphaConfig {
            depth: self.depth,
            hidden_width: self.hidden_width,
            pieces: self.pieces,
            train: DmnTrainConfig {
                learning_rate: self.learning_rate,
                epochs: self.epochs,
                batch_size: self.batch_size,
                seed,
                ..DmnTrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteSettings {
    pub neighbors: usize,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        Self {
            neighbors: OversampleConfig::default().neighbors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSettings {
    /// Built-in profile name or path to a profile file.
    pub profile: String,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            profile: "desk".into(),
        }
    }
}

impl ClassifierSettings {
    /// Resolves the profile; relative paths are taken from `base`.
    pub fn resolve(&self, base: Option<&Path>) -> Result<TransferProfile> {
        if let Some(p) = TransferProfile::builtin(&self.profile) {
            return Ok(p);
        }
        let path = Path::new(&self.profile);
        let path = match base {
            Some(b) if path.is_relative() => b.join(path),
            _ => path.to_path_buf(),
        };
        if !path.exists() {
            return Err(Error::Config(format!("unknown profile `{}`", self.profile)));
        }
        TransferProfile::load(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Protocol {
    /// Learning-set fractions, each a single stratified split.
    pub learning_sets: Vec<f64>,
    /// Fold counts for stratified k-fold runs.
    pub k_values: Vec<usize>,
}

/// One point of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolPoint {
    LearningSet { fraction: f64 },
    KFold { k: usize },
}

impl std::fmt::Display for ProtocolPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProtocolPoint::LearningSet { fraction } => write!(f, "learning_set={fraction}"),
            ProtocolPoint::KFold { k } => write!(f, "k={k}"),
        }
    }
}

impl Protocol {
    pub fn points(&self) -> Vec<ProtocolPoint> {
        self.learning_sets
            .iter()
            .map(|&fraction| ProtocolPoint::LearningSet { fraction })
            .chain(self.k_values.iter().map(|&k| ProtocolPoint::KFold { k }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub synthetic: Option<SyntheticSource>,
    pub label_column: String,
    pub batch_column: Option<String>,
    pub seeds: Vec<u64>,
    pub qnorm: QnormSettings,
    pub fusion: FusionSettings,
    pub smote: SmoteSettings,
    pub classifier: ClassifierSettings,
    pub ptso: PtsoConfig,
    pub protocol: Protocol,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            synthetic: None,
            label_column: LoadOptions::default().label_column,
            batch_column: None,
            seeds: vec![1],
            qnorm: QnormSettings::default(),
            fusion: FusionSettings::default(),
            smote: SmoteSettings::default(),
            classifier: ClassifierSettings::default(),
            ptso: PtsoConfig::default(),
            protocol: Protocol {
                learning_sets: vec![0.9],
                k_values: Vec::new(),
            },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c = Self::parse(text)?;
        c.validate()?;
        Ok(c)
    }

    fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file; a relative `dataset` path is resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = c.dataset.as_mut().filter(|d| d.is_relative()) {
            *d = base.join(&*d);
        }
        let profile = Path::new(&c.classifier.profile);
        if TransferProfile::builtin(&c.classifier.profile).is_none() && profile.is_relative() {
            c.classifier.profile = base.join(profile).to_string_lossy().into_owned();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        match (&self.dataset, &self.synthetic) {
            (Some(_), Some(_)) => return cfg("give either `dataset` or `[synthetic]`, not both".into()),
            (None, None) => return cfg("no `dataset` given".into()),
            _ => {}
        }
        if let Some(s) = &self.synthetic {
            if s.rows < 4 || !(s.carrier_share > 0.0 && s.carrier_share < 1.0) {
                return cfg(format!("synthetic source {s:?} is degenerate"));
            }
        }
        if self.seeds.is_empty() {
            return cfg("`seeds` is empty".into());
        }
        if self.protocol.points().is_empty() {
            return cfg("protocol has no learning sets or k values".into());
        }
        if let Some(f) = self.protocol.learning_sets.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return cfg(format!("learning-set fraction {f} outside (0, 1)"));
        }
        if let Some(k) = self.protocol.k_values.iter().find(|k| **k < 2) {
            return cfg(format!("k = {k} must be at least 2"));
        }
        let f = &self.fusion;
        if f.fused_count == Some(0) || f.depth == 0 || f.hidden_width == 0 || f.pieces == 0 {
            return cfg("fusion sizes must be positive".into());
        }
        if f.batch_size == 0 || f.learning_rate.is_nan() || f.learning_rate <= 0.0 {
            return cfg("fusion training needs a positive batch size and learning rate".into());
        }
        if self.smote.neighbors == 0 {
            return cfg("smote neighbors must be positive".into());
        }
        self.ptso.validate()?;
        self.classifier.resolve(None).map(|_| ())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            label_column: self.label_column.clone(),
            batch_column: self.batch_column.clone(),
            ..LoadOptions::default()
        }
    }

    /// Raw dataset bytes: the file, or the generated synthetic CSV.
    pub fn dataset_bytes(&self) -> Result<Vec<u8>> {
        match (&self.dataset, &self.synthetic) {
            (Some(path), _) => std::fs::read(path).map_err(|e| Error::io(path, e)),
            (None, Some(s)) => Ok(tabular::synthetic::cohort_csv(s.rows, s.carrier_share, s.seed).into_bytes()),
            (None, None) => Err(Error::Config("no `dataset` given".into())),
        }
    }

    pub fn load_dataset(&self) -> Result<(Dataset, Vec<u8>)> {
        let bytes = self.dataset_bytes()?;
        let ds = tabular::read_csv(bytes.as_slice(), &self.load_options())?;
        Ok((ds, bytes))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        short_hash(&serde_json::to_vec(self).expect("config serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn short_hash(bytes: &[u8]) -> String {
    sha256_hex(bytes)[..16].to_owned()
}
