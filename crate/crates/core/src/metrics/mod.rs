//! Layout quality metrics.
//!
//! Geometric metrics (`overlap`, `alignment`, `max_iou`) apply to every task;
//! composition metrics (`r_com`, `r_sub`) need a background scene and
//! `r_occ` is computed over a batch.

pub mod assignment;
mod composition;
mod report;

use std::collections::BTreeMap;

use crate::layout::{Category, Layout};

pub use composition::{r_com, r_occ, r_sub, sobel_magnitude, SOBEL_NORM};
pub use report::{metric_report, LayoutMetrics, MetricMeans, MetricReport, Skip};

/// Categories with at most this many elements per side are matched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// Whether the pair `(i, j)` is a permitted underlay nesting on a
/// background-constrained task.
pub(crate) fn is_nesting_exempt(layout: &Layout, i: usize, j: usize) -> bool {
    if !layout.task.background_constrained() {
        return false;
    }
    let a = &layout.elements[i];
    let b = &layout.elements[j];
    (a.category.is_underlay() && a.bbox.contains(&b.bbox))
        || (b.category.is_underlay() && b.bbox.contains(&a.bbox))
}

/// Mean pairwise IoU over unordered element pairs, skipping permitted
/// underlay nestings on background-constrained tasks. Zero when no pair is
/// eligible.
pub fn overlap(layout: &Layout) -> f64 {
    let n = layout.len();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if is_nesting_exempt(layout, i, j) {
                continue;
            }
            sum += layout.elements[i].bbox.iou(&layout.elements[j].bbox);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

/// For each element, the smallest same-axis gap (normalized) to any other
/// element over the six alignment axes.
pub fn nearest_axis_gaps(layout: &Layout) -> Vec<f64> {
    let n = layout.len();
    let axes: Vec<_> = layout
        .boxes()
        .map(|b| b.axes(layout.canvas_w, layout.canvas_h))
        .collect();
    (0..n)
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in 0..n {
                if i == j {
                    continue;
                }
                for (a, b) in axes[i].iter().zip(&axes[j]) {
                    best = best.min((a - b).abs());
                }
            }
            best
        })
        .collect()
}

/// Alignment score `(1/n) * sum(-ln(1 - d_i))`; zero for fewer than two elements.
pub fn alignment(layout: &Layout) -> f64 {
    let n = layout.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = nearest_axis_gaps(layout)
        .iter()
        // `0.0 - x` rather than `-x` so aligned layouts report +0.
        .map(|d| 0.0 - (1.0 - d).ln())
        .sum();
    total / n as f64
}

/// Maximum category-preserving matching IoU between a generated and a
/// reference layout, divided by the larger element count.
pub fn max_iou(generated: &Layout, reference: &Layout) -> f64 {
    max_iou_with(generated, reference, Solver::Auto)
}

/// Assignment solver selection for [`max_iou_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] elements per side, Hungarian beyond.
    Auto,
    Exhaustive,
    Hungarian,
}

pub fn max_iou_with(generated: &Layout, reference: &Layout, solver: Solver) -> f64 {
    let denom = generated.len().max(reference.len());
    if denom == 0 {
        return 1.0;
    }
    let mut groups: BTreeMap<&Category, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, e) in generated.elements.iter().enumerate() {
        groups.entry(&e.category).or_default().0.push(i);
    }
    for (j, e) in reference.elements.iter().enumerate() {
        groups.entry(&e.category).or_default().1.push(j);
    }
    let mut matched = Vec::new();
    for (gen_idx, ref_idx) in groups.values() {
        if gen_idx.is_empty() || ref_idx.is_empty() {
            continue;
        }
        let weights: Vec<Vec<f64>> = gen_idx
            .iter()
            .map(|&i| {
                ref_idx
                    .iter()
                    .map(|&j| generated.elements[i].bbox.iou(&reference.elements[j].bbox))
                    .collect()
            })
            .collect();
        let small = gen_idx.len() <= EXHAUSTIVE_LIMIT && ref_idx.len() <= EXHAUSTIVE_LIMIT;
        let assign = match (solver, small) {
            (Solver::Exhaustive, _) | (Solver::Auto, true) => {
                assignment::exhaustive(&weights, ref_idx.len())
            }
            _ => assignment::hungarian(&weights, ref_idx.len()),
        };
        for (r, c) in assign.iter().enumerate() {
            if let Some(c) = c {
                matched.push(weights[r][*c]);
            }
        }
    }
    assignment::canonical_sum(matched.into_iter()) / denom as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::TaskKind;

    fn l(task: TaskKind, w: u32, h: u32, items: &[(Category, [u32; 4])]) -> Layout {
        let mut out = Layout::new(w, h, task);
        for (c, b) in items {
            out.push(c.clone(), BBox::from(*b));
        }
        out
    }

    #[test]
    fn overlap_examples() {
        let disjoint = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [0, 0, 10, 10]),
                (Category::Text, [20, 0, 30, 10]),
            ],
        );
        assert_eq!(overlap(&disjoint), 0.0);
        let same = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [0, 0, 10, 10]),
                (Category::Text, [0, 0, 10, 10]),
            ],
        );
        assert_eq!(overlap(&same), 1.0);
        let half = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [0, 0, 10, 10]),
                (Category::Text, [5, 0, 15, 10]),
            ],
        );
        assert!((overlap(&half) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn underlay_nesting_is_exempt_only_with_background() {
        let items = [
            (Category::Underlay, [0, 0, 100, 50]),
            (Category::Text, [10, 10, 90, 40]),
        ];
        assert_eq!(overlap(&l(TaskKind::Bcef, 200, 200, &items)), 0.0);
        assert!(overlap(&l(TaskKind::Bfef, 200, 200, &items)) > 0.0);
    }

    #[test]
    fn alignment_examples() {
        let single = l(
            TaskKind::Bfef,
            100,
            100,
            &[(Category::Text, [0, 0, 10, 10])],
        );
        assert_eq!(alignment(&single), 0.0);
        let shared_left = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [10, 0, 30, 10]),
                (Category::Text, [10, 50, 70, 60]),
            ],
        );
        assert_eq!(alignment(&shared_left), 0.0);
        // 0.1-wide boxes with every same-axis gap >= 0.05 and vertical gaps exactly 0.05.
        let pair = l(
            TaskKind::Bfef,
            1000,
            1000,
            &[
                (Category::Text, [0, 0, 100, 100]),
                (Category::Text, [150, 50, 250, 150]),
            ],
        );
        let brute = {
            let a = pair.elements[0].bbox.axes(1000, 1000);
            let b = pair.elements[1].bbox.axes(1000, 1000);
            let d = a
                .iter()
                .zip(b.iter())
                .map(|(p, q)| (p - q).abs())
                .fold(f64::INFINITY, f64::min);
            -(1.0 - d).ln()
        };
        assert!((alignment(&pair) - brute).abs() < 1e-15);
        assert!((alignment(&pair) - 0.051_293_294_387_550_5).abs() < 1e-12);
    }

    #[test]
    fn max_iou_examples() {
        let a = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [0, 0, 10, 10]),
                (Category::Title, [0, 20, 50, 40]),
            ],
        );
        assert_eq!(max_iou(&a, &a), 1.0);
        let far = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [50, 50, 60, 60]),
                (Category::Title, [60, 0, 100, 10]),
            ],
        );
        assert_eq!(max_iou(&a, &far), 0.0);
        let g = l(
            TaskKind::Bfef,
            100,
            100,
            &[(Category::Text, [0, 0, 10, 10])],
        );
        let r = l(
            TaskKind::Bfef,
            100,
            100,
            &[(Category::Text, [5, 0, 15, 10])],
        );
        assert!((max_iou(&g, &r) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn max_iou_counts_unmatched_and_categories() {
        let g = l(
            TaskKind::Bfef,
            100,
            100,
            &[(Category::Text, [0, 0, 10, 10])],
        );
        let r = l(
            TaskKind::Bfef,
            100,
            100,
            &[
                (Category::Text, [0, 0, 10, 10]),
                (Category::Text, [20, 20, 30, 30]),
            ],
        );
        assert_eq!(max_iou(&g, &r), 0.5);
        let other = l(
            TaskKind::Bfef,
            100,
            100,
            &[(Category::Title, [0, 0, 10, 10])],
        );
        assert_eq!(max_iou(&g, &other), 0.0);
        let empty = Layout::new(100, 100, TaskKind::Bfef);
        assert_eq!(max_iou(&empty, &empty), 1.0);
        assert_eq!(max_iou(&g, &empty), 0.0);
    }

    #[test]
    fn large_groups_use_hungarian() {
        let mut g = Layout::new(400, 400, TaskKind::Bfef);
        let mut r = Layout::new(400, 400, TaskKind::Bfef);
        for k in 0..9u32 {
            g.push(Category::Text, BBox::new(k * 40, 0, k * 40 + 30, 30));
            r.push(
                Category::Text,
                BBox::new((8 - k) * 40 + 5, 0, (8 - k) * 40 + 35, 30),
            );
        }
        let auto = max_iou(&g, &r);
        let hung = max_iou_with(&g, &r, Solver::Hungarian);
        assert_eq!(auto, hung);
        assert!((auto - 25.0 / 35.0).abs() < 1e-12);
    }
}
