//! Task-dispatched design rules.
//!
//! | rule               | BFEF | BFEC | BCEF | BCEC |
//! |--------------------|------|------|------|------|
//! | overlap_inter      |  x   |  x   |  x*  |  x*  |
//! | overlap_background |      |      |  x   |  x   |
//! | invalid_underlay   |      |      |  x   |  x   |
//! | extreme_small      |      |      |  x   |  x   |
//! | extreme_large      |      |      |  x   |  x   |
//! | empty_region       |  x   |  x   |      |      |
//! | misaligned         |  x   |  x   |  x   |  x   |
//! | disorder           |  x   |  x   |      |      |
//!
//! `*` underlays may fully enclose other elements.

use serde::Serialize;

use super::{RuleConfig, RuleId, Violation};
use crate::geometry::{BBox, CoverageMask};
use crate::layout::{Layout, SceneContext};
use crate::metrics::{is_nesting_exempt, nearest_axis_gaps};

/// Severities are clamped into `[MIN_SEVERITY, 1]` so that every triggered
/// rule lowers the score.
pub const MIN_SEVERITY: f64 = 0.01;

const FRACTION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRule {
    pub rule: RuleId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RuleCheck {
    pub violations: Vec<Violation>,
    pub skipped: Vec<SkippedRule>,
}

impl RuleCheck {
    pub fn fired(&self, rule: RuleId) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

pub fn applies(rule: RuleId, layout: &Layout) -> bool {
    let bg = layout.task.background_constrained();
    match rule {
        RuleId::OverlapInter | RuleId::Misaligned => true,
        RuleId::OverlapBackground
        | RuleId::InvalidUnderlay
        | RuleId::ExtremeSmall
        | RuleId::ExtremeLarge => bg,
        RuleId::EmptyRegion | RuleId::Disorder => !bg,
    }
}

fn clamp_severity(s: f64) -> f64 {
    if s.is_nan() {
        return 1.0;
    }
    s.clamp(MIN_SEVERITY, 1.0)
}

/// Evaluates the rules that apply to the layout's task. The layout is assumed
/// structurally valid.
pub fn check_rules(layout: &Layout, ctx: &SceneContext, cfg: &RuleConfig) -> RuleCheck {
    let mut out = RuleCheck::default();
    for rule in RuleId::ALL {
        if !applies(rule, layout) {
            continue;
        }
        match rule {
            RuleId::OverlapInter => overlap_inter(layout, &mut out.violations),
            RuleId::OverlapBackground => match &ctx.saliency {
                Some(sal) => overlap_background(layout, sal, cfg, &mut out.violations),
                None => out.skipped.push(SkippedRule {
                    rule,
                    reason: "no saliency map".into(),
                }),
            },
            RuleId::InvalidUnderlay => invalid_underlay(layout, &mut out.violations),
            RuleId::ExtremeSmall => extreme_small(layout, cfg, &mut out.violations),
            RuleId::ExtremeLarge => extreme_large(layout, cfg, &mut out.violations),
            RuleId::EmptyRegion => empty_region(layout, cfg, &mut out.violations),
            RuleId::Misaligned => misaligned(layout, cfg, &mut out.violations),
            RuleId::Disorder => disorder(layout, cfg, &mut out.violations),
        }
    }
    out
}

fn overlap_inter(layout: &Layout, out: &mut Vec<Violation>) {
    let n = layout.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = &layout.elements[i].bbox;
            let b = &layout.elements[j].bbox;
            if a.intersection_area(b) == 0 || is_nesting_exempt(layout, i, j) {
                continue;
            }
            let iou = a.iou(b);
            out.push(Violation {
                rule: RuleId::OverlapInter,
                severity: clamp_severity(iou),
                elements: vec![i, j],
                message: format!(
                    "{} {i} and {} {j} overlap (IoU {iou:.3})",
                    layout.elements[i].category, layout.elements[j].category
                ),
            });
        }
    }
}

fn mean_saliency(sal: &crate::layout::SaliencyMap, b: &BBox) -> f64 {
    let mut sum = 0.0;
    for y in b.y_min..b.y_max {
        for x in b.x_min..b.x_max {
            sum += sal.get(x, y);
        }
    }
    sum / b.area() as f64
}

fn overlap_background(
    layout: &Layout,
    sal: &crate::layout::SaliencyMap,
    cfg: &RuleConfig,
    out: &mut Vec<Violation>,
) {
    for (i, e) in layout.elements.iter().enumerate() {
        if e.category.is_underlay() {
            continue;
        }
        let m = mean_saliency(sal, &e.bbox);
        if m > cfg.background_saliency {
            out.push(Violation {
                rule: RuleId::OverlapBackground,
                severity: clamp_severity(m),
                elements: vec![i],
                message: format!(
                    "{} {i} covers the subject (mean saliency {m:.3})",
                    e.category
                ),
            });
        }
    }
}

fn invalid_underlay(layout: &Layout, out: &mut Vec<Violation>) {
    for (i, u) in layout.elements.iter().enumerate() {
        if !u.category.is_underlay() {
            continue;
        }
        let nests = layout
            .elements
            .iter()
            .enumerate()
            .any(|(j, e)| j != i && u.bbox.contains(&e.bbox));
        if !nests {
            out.push(Violation {
                rule: RuleId::InvalidUnderlay,
                severity: 1.0,
                elements: vec![i],
                message: format!("underlay {i} contains no other element"),
            });
        }
    }
}

fn extreme_small(layout: &Layout, cfg: &RuleConfig, out: &mut Vec<Violation>) {
    for (i, e) in layout.elements.iter().enumerate() {
        let area = e.bbox.area();
        let h = e.bbox.height();
        if area < cfg.small_area || h < cfg.small_height {
            out.push(Violation {
                rule: RuleId::ExtremeSmall,
                severity: 1.0,
                elements: vec![i],
                message: format!(
                    "{} {i} is too small ({}x{h} px, area {area})",
                    e.category,
                    e.bbox.width()
                ),
            });
        }
    }
}

fn extreme_large(layout: &Layout, cfg: &RuleConfig, out: &mut Vec<Violation>) {
    let canvas = layout.canvas_area() as f64;
    for (i, e) in layout.elements.iter().enumerate() {
        let frac = e.bbox.area() as f64 / canvas;
        if frac > cfg.large_fraction + FRACTION_EPS {
            out.push(Violation {
                rule: RuleId::ExtremeLarge,
                severity: 1.0,
                elements: vec![i],
                message: format!(
                    "{} {i} covers {:.1}% of the canvas",
                    e.category,
                    100.0 * frac
                ),
            });
        }
    }
}

/// Grid cells of the canvas with integer boundaries `k * dim / cells`.
pub fn grid_cells(canvas_w: u32, canvas_h: u32, cols: u32, rows: u32) -> Vec<BBox> {
    let edge = |k: u32, dim: u32, n: u32| (u64::from(k) * u64::from(dim) / u64::from(n)) as u32;
    let mut cells = Vec::with_capacity((cols * rows) as usize);
    for r in 0..rows {
        for c in 0..cols {
            cells.push(BBox::new(
                edge(c, canvas_w, cols),
                edge(r, canvas_h, rows),
                edge(c + 1, canvas_w, cols),
                edge(r + 1, canvas_h, rows),
            ));
        }
    }
    cells
}

/// Number of grid cells no element intersects.
pub fn empty_cells(layout: &Layout, cfg: &RuleConfig) -> (usize, usize) {
    let cells = grid_cells(
        layout.canvas_w,
        layout.canvas_h,
        cfg.empty_grid_cols,
        cfg.empty_grid_rows,
    );
    let empty = cells
        .iter()
        .filter(|c| c.is_valid() && layout.boxes().all(|b| c.intersection_area(b) == 0))
        .count();
    (empty, cells.len())
}

fn empty_region(layout: &Layout, cfg: &RuleConfig, out: &mut Vec<Violation>) {
    let (empty, total) = empty_cells(layout, cfg);
    let frac = empty as f64 / total as f64;
    if frac > cfg.max_empty_fraction + FRACTION_EPS {
        out.push(Violation {
            rule: RuleId::EmptyRegion,
            severity: clamp_severity(frac),
            elements: Vec::new(),
            message: format!("{empty} of {total} canvas regions are empty"),
        });
    }
}

fn misaligned(layout: &Layout, cfg: &RuleConfig, out: &mut Vec<Violation>) {
    if layout.len() < 2 {
        return;
    }
    let gaps = nearest_axis_gaps(layout);
    let flagged: Vec<usize> = (0..gaps.len())
        .filter(|&i| gaps[i] > cfg.align_tolerance)
        .collect();
    if flagged.is_empty() {
        return;
    }
    let excess: f64 = flagged
        .iter()
        .map(|&i| gaps[i] - cfg.align_tolerance)
        .sum::<f64>()
        / flagged.len() as f64;
    out.push(Violation {
        rule: RuleId::Misaligned,
        severity: clamp_severity(excess),
        message: format!(
            "{} element(s) align with no neighbour (mean excess {excess:.4})",
            flagged.len()
        ),
        elements: flagged,
    });
}

/// Normalized Euclidean distance from each element center to its nearest neighbour.
pub fn nearest_center_distances(layout: &Layout) -> Vec<f64> {
    let centers: Vec<(f64, f64)> = layout
        .boxes()
        .map(|b| b.normalized_center(layout.canvas_w, layout.canvas_h))
        .collect();
    (0..centers.len())
        .map(|i| {
            centers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, c)| ((c.0 - centers[i].0).powi(2) + (c.1 - centers[i].1).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Coefficient of variation (population) of nearest-neighbour center distances.
pub fn spacing_cv(layout: &Layout) -> Option<f64> {
    if layout.len() < 2 {
        return None;
    }
    let d = nearest_center_distances(layout);
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return None;
    }
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt() / mean)
}

fn disorder(layout: &Layout, cfg: &RuleConfig, out: &mut Vec<Violation>) {
    if let Some(cv) = spacing_cv(layout) {
        if cv > cfg.disorder_cv {
            out.push(Violation {
                rule: RuleId::Disorder,
                severity: clamp_severity(cv - cfg.disorder_cv),
                elements: (0..layout.len()).collect(),
                message: format!("element spacing is irregular (CV {cv:.3})"),
            });
        }
    }
}

/// Fraction of the canvas covered by the union of element boxes.
pub fn covered_fraction(layout: &Layout) -> f64 {
    if layout.canvas_area() == 0 {
        return 0.0;
    }
    let m = CoverageMask::from_boxes(layout.canvas_w, layout.canvas_h, layout.boxes());
    m.count() as f64 / layout.canvas_area() as f64
}
