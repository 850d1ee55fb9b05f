use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::rules::{covered_fraction, empty_cells, spacing_cv, RuleCheck};
use super::{Label, RuleConfig};
use crate::layout::{Layout, SceneContext};
use crate::metrics::nearest_axis_gaps;

/// The four evaluation stages, each rendered as plain sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CotReport {
    pub glimpse: String,
    pub spatial: String,
    pub aesthetic: String,
    pub holistic: String,
}

impl CotReport {
    pub const TITLES: [&'static str; 4] = [
        "Layout Glimpse",
        "Spatial Deconstruction",
        "Aesthetic Appraisal",
        "Holistic Evaluation",
    ];

    pub fn sections(&self) -> [(&'static str, &str); 4] {
        [
            (Self::TITLES[0], &self.glimpse),
            (Self::TITLES[1], &self.spatial),
            (Self::TITLES[2], &self.aesthetic),
            (Self::TITLES[3], &self.holistic),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (title, body)) in self.sections().iter().enumerate() {
            let _ = writeln!(out, "## {}. {title}", i + 1);
            let _ = writeln!(out, "{body}");
            if i < 3 {
                out.push('\n');
            }
        }
        out
    }
}

pub(super) fn build(
    layout: &Layout,
    ctx: &SceneContext,
    cfg: &RuleConfig,
    check: &RuleCheck,
    score: f64,
    label: Label,
) -> CotReport {
    CotReport {
        glimpse: glimpse(layout, ctx),
        spatial: spatial(layout, check),
        aesthetic: aesthetic(layout, cfg),
        holistic: holistic(check, score, cfg.threshold, label),
    }
}

fn glimpse(layout: &Layout, ctx: &SceneContext) -> String {
    let mut census: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &layout.elements {
        *census.entry(e.category.name()).or_default() += 1;
    }
    let parts: Vec<String> = census.iter().map(|(k, v)| format!("{v} {k}")).collect();
    let base = if ctx.background.is_some() {
        "on a background image"
    } else {
        "on a blank canvas"
    };
    let with_content = layout
        .elements
        .iter()
        .filter(|e| e.content.is_some())
        .count();
    let mut s = format!(
        "A {}x{} px {} layout {base} with {} element(s)",
        layout.canvas_w,
        layout.canvas_h,
        layout.task,
        layout.len()
    );
    if !parts.is_empty() {
        let _ = write!(s, ": {}", parts.join(", "));
    }
    s.push('.');
    if with_content > 0 {
        let _ = write!(s, " {with_content} element(s) carry content.");
    }
    s
}

fn spatial(layout: &Layout, check: &RuleCheck) -> String {
    let mut lines = Vec::new();
    if check.violations.is_empty() {
        lines.push("No rule violations were found in the element geometry.".to_string());
    } else {
        for v in &check.violations {
            lines.push(format!(
                "- {}: {} (severity {:.3}).",
                v.rule, v.message, v.severity
            ));
        }
    }
    for s in &check.skipped {
        lines.push(format!("- {} not checked: {}.", s.rule, s.reason));
    }
    if layout.len() >= 2 {
        let gaps = nearest_axis_gaps(layout);
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        lines.push(format!(
            "Mean nearest-axis offset between elements: {mean:.4}."
        ));
    }
    lines.join("\n")
}

fn aesthetic(layout: &Layout, cfg: &RuleConfig) -> String {
    let covered = covered_fraction(layout);
    let (empty, total) = empty_cells(layout, cfg);
    let mut s = format!(
        "Elements cover {:.1}% of the canvas; {empty} of {total} regions are empty.",
        100.0 * covered
    );
    let area: f64 = layout.boxes().map(|b| b.area() as f64).sum();
    if area > 0.0 {
        let (mut cx, mut cy) = (0.0, 0.0);
        for b in layout.boxes() {
            let (x, y) = b.normalized_center(layout.canvas_w, layout.canvas_h);
            let w = b.area() as f64 / area;
            cx += w * x;
            cy += w * y;
        }
        let _ = write!(
            s,
            " The area-weighted center of mass sits at ({:+.3}, {:+.3}) from the canvas center.",
            cx - 0.5,
            cy - 0.5
        );
    }
    if let Some(cv) = spacing_cv(layout) {
        let _ = write!(s, " Spacing variation (CV) is {cv:.3}.");
    }
    s
}

fn holistic(check: &RuleCheck, score: f64, threshold: f64, label: Label) -> String {
    let word = match label {
        Label::Qualified => "pass",
        Label::Unqualified => "fail",
    };
    format!(
        "Confidence {score:.3} against threshold {threshold:.3} with {} violation(s); the layout is {label}. Judgment: {word}",
        check.violations.len()
    )
}
