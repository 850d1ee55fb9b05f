use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RuleId;
use crate::error::{Error, Result};

/// Per-rule weights applied to violation severities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleWeights {
    pub overlap_inter: f64,
    pub overlap_background: f64,
    pub invalid_underlay: f64,
    pub extreme_small: f64,
    pub extreme_large: f64,
    pub empty_region: f64,
    pub misaligned: f64,
    pub disorder: f64,
}

impl Default for RuleWeights {
    fn default() -> Self {
        RuleWeights {
            overlap_inter: 0.6,
            overlap_background: 0.5,
            invalid_underlay: 0.4,
            extreme_small: 0.4,
            extreme_large: 0.4,
            empty_region: 0.3,
            misaligned: 0.3,
            disorder: 0.3,
        }
    }
}

impl RuleWeights {
    pub fn get(&self, rule: RuleId) -> f64 {
        match rule {
            RuleId::OverlapInter => self.overlap_inter,
            RuleId::OverlapBackground => self.overlap_background,
            RuleId::InvalidUnderlay => self.invalid_underlay,
            RuleId::ExtremeSmall => self.extreme_small,
            RuleId::ExtremeLarge => self.extreme_large,
            RuleId::EmptyRegion => self.empty_region,
            RuleId::Misaligned => self.misaligned,
            RuleId::Disorder => self.disorder,
        }
    }
}

/// Thresholds and weights of the rule engine. Loads from a TOML key-value
/// file; omitted keys keep their defaults and unknown keys are rejected.
///
/// ```toml
/// small_area = 1000
/// threshold = 0.5
/// [weights]
/// misaligned = 0.2
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub weights: RuleWeights,
    /// Boxes with area strictly below this many px^2 are too small.
    pub small_area: u64,
    /// Boxes strictly shorter than this many px are too small.
    pub small_height: u32,
    /// Boxes covering strictly more than this fraction of the canvas are too large.
    pub large_fraction: f64,
    /// Normalized same-axis distance within which two elements count as aligned.
    pub align_tolerance: f64,
    pub empty_grid_cols: u32,
    pub empty_grid_rows: u32,
    /// A layout fails when strictly more than this fraction of grid cells is empty.
    pub max_empty_fraction: f64,
    /// Coefficient of variation of nearest-neighbour center distances above
    /// which a layout reads as disordered.
    pub disorder_cv: f64,
    /// Mean covered saliency above which an element occludes the subject.
    pub background_saliency: f64,
    /// Scores at or above this value are qualified.
    pub threshold: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            weights: RuleWeights::default(),
            small_area: 1000,
            small_height: 30,
            large_fraction: 1.0 / 3.0,
            align_tolerance: 0.01,
            empty_grid_cols: 3,
            empty_grid_rows: 3,
            max_empty_fraction: 2.0 / 3.0,
            disorder_cv: 1.0,
            background_saliency: 0.5,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Any violation at all makes a layout unqualified, mirroring annotation
/// guidelines that list disqualifying characteristics.
pub const DEFAULT_THRESHOLD: f64 = 1.0;

impl RuleConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RuleConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("rule config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for rule in RuleId::ALL {
            let w = self.weights.get(rule);
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Config(format!(
                    "weight for {} must lie in (0, 1], got {w}",
                    rule.as_str()
                )));
            }
        }
        let positive = [
            ("large_fraction", self.large_fraction),
            ("align_tolerance", self.align_tolerance),
            ("max_empty_fraction", self.max_empty_fraction),
            ("disorder_cv", self.disorder_cv),
            ("background_saliency", self.background_saliency),
            ("threshold", self.threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.threshold > 1.0 {
            return Err(Error::Config(format!(
                "threshold must not exceed 1, got {}",
                self.threshold
            )));
        }
        if self.small_area == 0
            || self.small_height == 0
            || self.empty_grid_cols == 0
            || self.empty_grid_rows == 0
        {
            return Err(Error::Config(
                "size thresholds and grid dimensions must be positive".into(),
            ));
        }
        Ok(())
    }
}
