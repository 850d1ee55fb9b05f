use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::CorpusSpec;
use crate::dmpo::{TokenScheme, TrainConfig};
use crate::error::{Error, Result};
use crate::qualify::RuleConfig;

/// Token scheme knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    /// Coordinate bins per axis.
    pub grid: u32,
    /// Longest layout the policy can emit.
    pub max_elements: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let s = TokenScheme::default();
        SchemeConfig {
            grid: s.grid,
            max_elements: s.max_elements,
        }
    }
}

impl SchemeConfig {
    pub fn scheme(&self) -> TokenScheme {
        TokenScheme::new(self.grid, self.max_elements)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 300,
            lr: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Samples per prompt context when comparing policies.
    pub samples: usize,
    /// Seeds used by `train --ablation` (0, 1, ...).
    pub ablation_seeds: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            samples: 128,
            ablation_seeds: 5,
        }
    }
}

/// Everything a run can be configured with. Loaded from a TOML file whose
/// tables mirror the fields; omitted keys keep their defaults, unknown keys
/// are rejected, and command-line flags override the file.
///
/// ```toml
/// [rules]
/// threshold = 1.0
/// [corpus]
/// counts = [100, 100, 100, 100]   # bfef, bcef, bfec, bcec
/// [train]
/// steps = 200
/// margin = { kind = "fixed", m = 0.5 }
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rules: RuleConfig,
    pub corpus: CorpusSpec,
    pub scheme: SchemeConfig,
    pub pretrain: PretrainConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.rules.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
