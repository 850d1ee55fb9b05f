//! Synthetic labeled layouts.
//!
//! Qualified bases are single left-aligned columns with evenly spaced
//! centers. Background-free columns are wide enough to span two grid
//! columns; background-constrained columns sit in one half of the canvas
//! while a flat "subject" rectangle of saliency 1 sits in the other half.
//! Unqualified samples apply exactly one geometric edit to such a base.

use image::{GrayImage, Luma};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusSpec, LabeledSample, Provenance};
use crate::geometry::BBox;
use crate::layout::{Category, Element, Layout, SaliencyMap, SceneContext, TaskKind};
use crate::qualify::{Label, RuleConfig, RuleId};

const BF_CATEGORIES: [Category; 6] = [
    Category::Title,
    Category::Text,
    Category::Text,
    Category::List,
    Category::Figure,
    Category::Logo,
];
const BC_CATEGORIES: [Category; 5] = [
    Category::Title,
    Category::Text,
    Category::Text,
    Category::Logo,
    Category::Embellishment,
];
const CONTENT: [&str; 8] = [
    "New Season",
    "Free Shipping",
    "Limited Offer",
    "Shop Now",
    "Best Seller",
    "Soft Touch",
    "Fresh Picks",
    "Up to 50% off",
];

/// Vertical gap kept between neighbouring slots.
const SLOT_GAP: f64 = 16.0;
/// Padding of an underlay around the element it hosts.
const UNDERLAY_PAD: u32 = 8;

fn stream_rng(seed: u64, task: TaskKind, index: usize) -> ChaCha8Rng {
    let mut z = seed
        ^ ((task.index() as u64 + 1) << 56)
        ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// A column element, with the underlay hosting it if any.
#[derive(Debug, Clone)]
struct Entry {
    element: Element,
    underlay: Option<BBox>,
}

struct Base {
    layout: Layout,
    ctx: SceneContext,
    /// Horizontal extent available to the column, `[x0, x1)`.
    band: (u32, u32),
    /// Indices (in `layout.elements`) of elements without an underlay.
    standalone: Vec<usize>,
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn axis_clearance(cfg: &RuleConfig, dim: u32) -> f64 {
    cfg.align_tolerance * f64::from(dim) + 2.0
}

fn scene(rng: &mut ChaCha8Rng, w: u32, h: u32, subject_half: (u32, u32)) -> SceneContext {
    let level: u8 = rng.random_range(20..=235);
    let subject_level = if level > 127 { level - 90 } else { level + 90 };
    let (hx0, hx1) = subject_half;
    let span = hx1 - hx0;
    let sw = rng.random_range(span / 3..=span - 16);
    let sh = rng.random_range(h / 5..=h / 2);
    let sx = hx0 + 8 + rng.random_range(0..=span - 16 - sw);
    let sy = rng.random_range(0..=h - sh);
    let subject = BBox::new(sx, sy, sx + sw, sy + sh);
    let mut bg = GrayImage::from_pixel(w, h, Luma([level]));
    let mut sal = SaliencyMap::filled(w, h, 0.0);
    for y in subject.y_min..subject.y_max {
        for x in subject.x_min..subject.x_max {
            bg.put_pixel(x, y, Luma([subject_level]));
            sal.set(x, y, 1.0);
        }
    }
    SceneContext::empty().with_background(bg).with_saliency(sal)
}

fn content_for(rng: &mut ChaCha8Rng, task: TaskKind, c: &Category) -> Option<String> {
    (task.content_constrained() && matches!(c, Category::Text | Category::Title))
        .then(|| pick(rng, &CONTENT).to_string())
}

/// Builds a qualified column of `n` elements (underlays included).
fn base(rng: &mut ChaCha8Rng, task: TaskKind, w: u32, h: u32, n: usize, cfg: &RuleConfig) -> Base {
    let bc = task.background_constrained();
    let (band, ctx) = if bc {
        let left = rng.random_bool(0.5);
        let (elems, subj) = if left {
            ((0, w / 2), (w / 2, w))
        } else {
            ((w / 2, w), (0, w / 2))
        };
        (elems, scene(rng, w, h, subj))
    } else {
        ((0, w), SceneContext::empty())
    };

    // Entries: plain elements, or text hosted by an underlay (two elements).
    let pairs = if bc && n >= 3 {
        rng.random_range(0..=(n - 1) / 2)
    } else {
        0
    };
    let plain = n - 2 * pairs;
    let mut hosted: Vec<bool> = std::iter::repeat_n(true, pairs)
        .chain(std::iter::repeat_n(false, plain))
        .collect();
    hosted.shuffle(rng);
    let slots = hosted.len();

    let margin_y = rng.random_range(20..=40) as f64;
    let slot = (f64::from(h) - 2.0 * margin_y) / slots as f64;
    let pad = if bc { 2 * UNDERLAY_PAD } else { 0 };
    let min_h = f64::from(cfg.small_height.max(30) + 6);
    let max_h = (slot - SLOT_GAP - f64::from(pad))
        .min(slot * 0.8)
        .max(min_h);

    let (bx0, bx1) = band;
    let inset = if bc {
        rng.random_range(16..=32)
    } else {
        rng.random_range(20..=40)
    };
    let x_min = bx0 + inset;
    let (w_lo, w_hi) = if bc {
        let hi = bx1 - 16 - UNDERLAY_PAD - x_min;
        (
            ((cfg.small_area as f64 / min_h).ceil() as u32 + 8).min(hi),
            hi,
        )
    } else {
        // Wide enough to reach the second grid column.
        (w * 9 / 20, (w * 17 / 20).min(w - x_min - 20))
    };
    let cats: &[Category] = if bc { &BC_CATEGORIES } else { &BF_CATEGORIES };

    let mut entries = Vec::with_capacity(slots);
    for (i, &host) in hosted.iter().enumerate() {
        let eh = rng.random_range(min_h..=max_h).round() as u32;
        let ew = rng.random_range(w_lo..=w_hi.max(w_lo));
        let center = margin_y + (i as f64 + 0.5) * slot;
        let y0 = (center - f64::from(eh) / 2.0).round() as u32;
        let category = if host {
            Category::Text
        } else {
            pick(rng, cats).clone()
        };
        let content = content_for(rng, task, &category);
        let element = Element {
            category,
            bbox: BBox::new(x_min, y0, x_min + ew, y0 + eh),
            content,
        };
        let underlay = host.then(|| {
            let b = &element.bbox;
            BBox::new(
                b.x_min - UNDERLAY_PAD,
                b.y_min - UNDERLAY_PAD,
                b.x_max + UNDERLAY_PAD,
                b.y_max + UNDERLAY_PAD,
            )
        });
        entries.push(Entry { element, underlay });
    }

    let mut layout = Layout::new(w, h, task);
    let mut standalone = Vec::new();
    for e in entries {
        if let Some(u) = e.underlay {
            layout.elements.push(Element::new(Category::Underlay, u));
        } else {
            standalone.push(layout.len());
        }
        layout.elements.push(e.element);
    }
    Base {
        layout,
        ctx,
        band,
        standalone,
    }
}

fn far_from(v: f64, others: &[f64], clearance: f64) -> bool {
    others.iter().all(|o| (v - o).abs() > clearance)
}

/// Moves element `j` horizontally so none of its six alignment axes lies
/// within tolerance of any other element. Returns false if no position works.
fn jitter(rng: &mut ChaCha8Rng, b: &mut Base, j: usize, cfg: &RuleConfig) -> bool {
    let l = &b.layout;
    let (w, h) = (l.canvas_w, l.canvas_h);
    let cx = axis_clearance(cfg, w);
    let cy = axis_clearance(cfg, h);
    let others: Vec<[f64; 6]> = l
        .elements
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, e)| {
            let (c, m) = (e.bbox.center(), &e.bbox);
            [
                m.x_min as f64,
                c.0,
                m.x_max as f64,
                m.y_min as f64,
                c.1,
                m.y_max as f64,
            ]
        })
        .collect();
    let axis = |k: usize| others.iter().map(|a| a[k]).collect::<Vec<_>>();
    let (xs, xcs, xms, ys, ycs, yms) = (axis(0), axis(1), axis(2), axis(3), axis(4), axis(5));
    let e = &l.elements[j].bbox;
    let (ey0, eh) = (e.y_min, e.height());
    let yc = f64::from(ey0) + f64::from(eh) / 2.0;
    if !(far_from(ey0 as f64, &ys, cy)
        && far_from(yc, &ycs, cy)
        && far_from((ey0 + eh) as f64, &yms, cy))
    {
        return false;
    }
    let (bx0, bx1) = b.band;
    let bc = l.task.background_constrained();
    let min_w = if bc {
        (cfg.small_area as f64 / f64::from(eh)).ceil() as u32 + 8
    } else {
        w * 9 / 20
    };
    let x_hi = bx1 - if bc { 16 } else { 20 };
    let x_lo = bx0 + 4;
    let x_start_hi = if bc {
        x_hi.saturating_sub(min_w)
    } else {
        w / 3
    };
    for _ in 0..400 {
        if x_start_hi <= x_lo {
            break;
        }
        let x0 = rng.random_range(x_lo..x_start_hi);
        let max_w = (x_hi - x0).min(if bc { u32::MAX } else { w * 17 / 20 });
        if max_w <= min_w {
            continue;
        }
        let ww = rng.random_range(min_w..=max_w);
        let x1 = x0 + ww;
        let xc = f64::from(x0) + f64::from(ww) / 2.0;
        if far_from(x0 as f64, &xs, cx) && far_from(xc, &xcs, cx) && far_from(x1 as f64, &xms, cx) {
            let bb = &mut b.layout.elements[j].bbox;
            bb.x_min = x0;
            bb.x_max = x1;
            return true;
        }
    }
    false
}

fn inject(rng: &mut ChaCha8Rng, b: &mut Base, kind: RuleId, cfg: &RuleConfig) -> bool {
    let (w, h) = (b.layout.canvas_w, b.layout.canvas_h);
    match kind {
        RuleId::OverlapInter => {
            let j = *pick(rng, &b.standalone);
            let src = b.layout.elements[j].clone();
            let dy = (src.bbox.height() / 2).max(1);
            let mut dup = src;
            if dup.bbox.y_max + dy <= h {
                dup.bbox.y_min += dy;
                dup.bbox.y_max += dy;
            } else {
                dup.bbox.y_min -= dy;
                dup.bbox.y_max -= dy;
            }
            b.layout.elements.push(dup);
            true
        }
        RuleId::ExtremeSmall => {
            let j = *pick(rng, &b.standalone);
            let bb = &mut b.layout.elements[j].bbox;
            let target = cfg.small_height.saturating_sub(10).max(2);
            let shrink = bb.height().saturating_sub(target);
            bb.y_min += shrink / 2;
            bb.y_max = bb.y_min + target.min(bb.height());
            true
        }
        RuleId::ExtremeLarge => {
            // An underlay hosting the whole column, tall enough to exceed the size limit.
            let top = b.layout.boxes().map(|bb| bb.y_min).min().unwrap_or(0);
            let bottom = b.layout.boxes().map(|bb| bb.y_max).max().unwrap_or(h);
            let (x0, x1) = b.band;
            let need = (cfg.large_fraction * (w as f64) * (h as f64) / f64::from(x1 - x0)).ceil()
                as u32
                + 4;
            let y1 = bottom.max(top + need).min(h);
            let big = BBox::new(x0, top, x1, y1);
            if big.area() as f64 <= cfg.large_fraction * b.layout.canvas_area() as f64 + 1.0 {
                return false;
            }
            b.layout
                .elements
                .push(Element::new(Category::Underlay, big));
            true
        }
        RuleId::InvalidUnderlay => {
            // In the subject half, top-aligned with a column element.
            let (bx0, bx1) = b.band;
            let (sx0, sx1) = if bx0 == 0 { (bx1, w) } else { (0, bx0) };
            let anchor = &b.layout.elements[*pick(rng, &b.standalone)].bbox;
            let uh = anchor.height().max(cfg.small_height + 10);
            let uw =
                ((cfg.small_area as f64 / f64::from(uh)).ceil() as u32 + 20).min(sx1 - sx0 - 16);
            let x0 = sx0 + 8 + rng.random_range(0..=(sx1 - sx0 - 16 - uw));
            let y0 = anchor.y_min.min(h - uh);
            b.layout.elements.push(Element::new(
                Category::Underlay,
                BBox::new(x0, y0, x0 + uw, y0 + uh),
            ));
            true
        }
        RuleId::Misaligned => {
            let mut cands = b.standalone.clone();
            cands.shuffle(rng);
            cands.into_iter().any(|j| jitter(rng, b, j, cfg))
        }
        RuleId::EmptyRegion => {
            let cols = cfg.empty_grid_cols.max(1);
            let rows = cfg.empty_grid_rows.max(1);
            for e in &mut b.layout.elements {
                let bb = &mut e.bbox;
                *bb = BBox::new(
                    bb.x_min / cols,
                    bb.y_min / rows,
                    bb.x_max / cols,
                    bb.y_max / rows,
                );
            }
            true
        }
        RuleId::OverlapBackground | RuleId::Disorder => false,
    }
}

/// Rules a generated violation can target for a task.
pub fn injections_for(task: TaskKind) -> &'static [RuleId] {
    if task.background_constrained() {
        &[
            RuleId::OverlapInter,
            RuleId::ExtremeSmall,
            RuleId::ExtremeLarge,
            RuleId::InvalidUnderlay,
            RuleId::Misaligned,
        ]
    } else {
        &[
            RuleId::OverlapInter,
            RuleId::Misaligned,
            RuleId::EmptyRegion,
        ]
    }
}

fn adds_element(kind: RuleId) -> bool {
    matches!(
        kind,
        RuleId::OverlapInter | RuleId::ExtremeLarge | RuleId::InvalidUnderlay
    )
}

/// One sample, a pure function of the spec, task, index and target label.
pub(crate) fn sample(
    spec: &CorpusSpec,
    cfg: &RuleConfig,
    task: TaskKind,
    index: usize,
    label: Label,
) -> LabeledSample {
    let mut rng = stream_rng(spec.seed, task, index);
    let (w, h) = (spec.canvas_w, spec.canvas_h);
    let lo = spec.min_elements.max(2);
    let hi = spec.max_elements.max(lo);
    loop {
        match label {
            Label::Qualified => {
                let n = rng.random_range(lo..=hi);
                let b = base(&mut rng, task, w, h, n, cfg);
                return LabeledSample {
                    layout: b.layout,
                    ctx: b.ctx,
                    label,
                    provenance: Provenance::Clean,
                };
            }
            Label::Unqualified => {
                let kind = *pick(&mut rng, injections_for(task));
                let top = if adds_element(kind) {
                    hi.saturating_sub(1).max(lo)
                } else {
                    hi
                };
                let n = rng.random_range(lo..=top);
                let mut b = base(&mut rng, task, w, h, n, cfg);
                if b.standalone.is_empty() {
                    continue;
                }
                if inject(&mut rng, &mut b, kind, cfg) {
                    return LabeledSample {
                        layout: b.layout,
                        ctx: b.ctx,
                        label,
                        provenance: Provenance::Injected(kind),
                    };
                }
                // No valid placement for this base: draw a fresh one.
            }
        }
    }
}

/// Labels per task, shuffled deterministically.
pub(crate) fn labels(spec: &CorpusSpec, task: TaskKind, n: usize) -> Vec<Label> {
    let pos = (n as f64 * spec.positive_ratio).round() as usize;
    let mut v: Vec<Label> = (0..n)
        .map(|i| {
            if i < pos {
                Label::Qualified
            } else {
                Label::Unqualified
            }
        })
        .collect();
    let mut rng = stream_rng(spec.seed ^ 0x4c41_4245_4c53, task, usize::MAX);
    v.shuffle(&mut rng);
    v
}
