//! Deterministic layout evaluator.
//!
//! [`qualify`] checks a layout against the design rules of its task, turns
//! the violations into a confidence score in `[0, 1]` and writes a four-stage
//! report (glimpse, spatial deconstruction, aesthetic appraisal, holistic
//! evaluation) that ends in `pass` or `fail`.

mod config;
mod report;
pub mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{validate, Layout, SceneContext};

pub use config::{RuleConfig, RuleWeights, DEFAULT_THRESHOLD};
pub use report::CotReport;
pub use rules::{check_rules, RuleCheck, SkippedRule, MIN_SEVERITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    OverlapInter,
    OverlapBackground,
    InvalidUnderlay,
    ExtremeSmall,
    ExtremeLarge,
    EmptyRegion,
    Misaligned,
    Disorder,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::OverlapInter,
        RuleId::OverlapBackground,
        RuleId::InvalidUnderlay,
        RuleId::ExtremeSmall,
        RuleId::ExtremeLarge,
        RuleId::EmptyRegion,
        RuleId::Misaligned,
        RuleId::Disorder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::OverlapInter => "overlap_inter",
            RuleId::OverlapBackground => "overlap_background",
            RuleId::InvalidUnderlay => "invalid_underlay",
            RuleId::ExtremeSmall => "extreme_small",
            RuleId::ExtremeLarge => "extreme_large",
            RuleId::EmptyRegion => "empty_region",
            RuleId::Misaligned => "misaligned",
            RuleId::Disorder => "disorder",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    /// In `(0, 1]`.
    pub severity: f64,
    pub elements: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Qualified,
    Unqualified,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Qualified => "qualified",
            Label::Unqualified => "unqualified",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub label: Label,
    /// Layout reward in `[0, 1]`.
    pub score: f64,
    pub threshold: f64,
    pub violations: Vec<Violation>,
    pub skipped: Vec<SkippedRule>,
    pub report: CotReport,
}

impl Verdict {
    pub fn is_qualified(&self) -> bool {
        self.label == Label::Qualified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// `max(0, 1 - sum(weight * severity))`; 1 for no violations.
pub fn confidence(violations: &[Violation], cfg: &RuleConfig) -> f64 {
    let penalty: f64 = violations
        .iter()
        .map(|v| cfg.weights.get(v.rule) * v.severity)
        .sum();
    (1.0 - penalty).max(0.0)
}

pub fn label_for(score: f64, cfg: &RuleConfig) -> Label {
    if score >= cfg.threshold {
        Label::Qualified
    } else {
        Label::Unqualified
    }
}

/// Score only, without building the report. Invalid layouts score 0.
pub fn score(layout: &Layout, ctx: &SceneContext, cfg: &RuleConfig) -> f64 {
    if !validate(layout, ctx).is_empty() {
        return 0.0;
    }
    confidence(&check_rules(layout, ctx, cfg).violations, cfg)
}

pub fn qualify(layout: &Layout, ctx: &SceneContext, cfg: &RuleConfig) -> Result<Verdict> {
    let faults = validate(layout, ctx);
    if !faults.is_empty() {
        return Err(Error::InvalidLayout(faults));
    }
    let check = check_rules(layout, ctx, cfg);
    let score = confidence(&check.violations, cfg);
    let label = label_for(score, cfg);
    let report = report::build(layout, ctx, cfg, &check, score, label);
    Ok(Verdict {
        label,
        score,
        threshold: cfg.threshold,
        violations: check.violations,
        skipped: check.skipped,
        report,
    })
}

/// Fraction of positions where the predicted label equals the true label.
pub fn accuracy(predicted: &[Label], truth: &[Label]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "predicted labels",
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}
