//! Dual-branch layout processor: a visualization branch that paints
//! category-colored blocks over the background, and a geometry branch that
//! describes every element as text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::{BBox, CoverageMask};
use crate::layout::{Category, Element, Layout, SceneContext};

pub type Color = [u8; 3];

/// Fallback colors for categories outside the default table. None is gray
/// and none repeats a default color.
const PALETTE: [(Color, &str); 8] = [
    ([230, 159, 0], "amber"),
    ([0, 114, 178], "cobalt"),
    ([0, 158, 115], "jade"),
    ([204, 121, 167], "rose"),
    ([86, 180, 233], "sky"),
    ([213, 94, 0], "rust"),
    ([120, 60, 200], "indigo"),
    ([160, 200, 40], "lime"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMap {
    colors: BTreeMap<Category, (Color, String)>,
}

impl Default for ColorMap {
    fn default() -> Self {
        let table: [(Category, Color, &str); 9] = [
            (Category::Text, [220, 50, 47], "red"),
            (Category::Title, [203, 75, 22], "orange"),
            (Category::Logo, [38, 139, 210], "blue"),
            (Category::Underlay, [133, 153, 0], "green"),
            (Category::Embellishment, [181, 137, 0], "yellow"),
            (Category::List, [108, 113, 196], "violet"),
            (Category::Table, [42, 161, 152], "cyan"),
            (Category::Figure, [211, 54, 130], "magenta"),
            (Category::Product, [88, 110, 117], "slate"),
        ];
        ColorMap {
            colors: table
                .into_iter()
                .map(|(c, rgb, name)| (c, (rgb, name.to_string())))
                .collect(),
        }
    }
}

/// FNV-1a over the category name.
fn palette_slot(name: &str) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    (h % PALETTE.len() as u64) as usize
}

impl ColorMap {
    pub fn set(&mut self, category: Category, color: Color, name: impl Into<String>) {
        self.colors.insert(category, (color, name.into()));
    }

    pub fn color(&self, category: &Category) -> Color {
        match self.colors.get(category) {
            Some((c, _)) => *c,
            None => PALETTE[palette_slot(category.name())].0,
        }
    }

    pub fn color_name(&self, category: &Category) -> String {
        match self.colors.get(category) {
            Some((_, n)) => n.clone(),
            None => PALETTE[palette_slot(category.name())].1.to_string(),
        }
    }
}

/// 60% color over 40% base, in integer arithmetic.
#[inline]
pub fn blend(color: u8, base: u8) -> u8 {
    ((3 * u16::from(color) + 2 * u16::from(base)) / 5) as u8
}

/// Glyph ink: the block color at 60% over black.
#[inline]
fn ink(color: u8) -> u8 {
    ((3 * u16::from(color)) / 5) as u8
}

/// Deterministic 5x7 dot pattern for a character; bit `r * 5 + c` is dot
/// `(c, r)`. Blank for whitespace. The top row is always inked so every
/// visible character leaves a mark.
pub fn glyph(c: char) -> u64 {
    if c.is_whitespace() {
        return 0;
    }
    let mut h = (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5851_f42d_4c95_7f2d;
    h ^= h >> 29;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 32;
    (h & ((1u64 << 35) - 1)) | 0b11111
}

fn base_image(layout: &Layout, ctx: &SceneContext) -> Result<RgbImage> {
    match (&ctx.background, layout.task.background_constrained()) {
        (Some(bg), true) => {
            if bg.dimensions() != (layout.canvas_w, layout.canvas_h) {
                return Err(Error::DimensionMismatch {
                    want_w: layout.canvas_w,
                    want_h: layout.canvas_h,
                    got_w: bg.width(),
                    got_h: bg.height(),
                });
            }
            Ok(RgbImage::from_fn(bg.width(), bg.height(), |x, y| {
                let v = bg.get_pixel(x, y)[0];
                Rgb([v, v, v])
            }))
        }
        (None, true) => Err(Error::MissingBackground(
            "background-constrained layouts render over their background",
        )),
        (_, false) => Ok(RgbImage::from_pixel(
            layout.canvas_w,
            layout.canvas_h,
            Rgb([255, 255, 255]),
        )),
    }
}

fn paint_block(img: &mut RgbImage, b: &BBox, color: Color) {
    for y in b.y_min..b.y_max.min(img.height()) {
        for x in b.x_min..b.x_max.min(img.width()) {
            let p = img.get_pixel_mut(x, y);
            for k in 0..3 {
                p[k] = blend(color[k], p[k]);
            }
        }
    }
}

/// Stamps `text` as 5x7 glyphs inside `b`, wrapping at the box width and
/// stopping at its bottom edge. Dots are scaled up in tall boxes.
fn stamp_text(img: &mut RgbImage, b: &BBox, text: &str, color: Color) {
    let pad = 2u32;
    if b.width() < 5 + 2 * pad || b.height() < 7 + 2 * pad {
        return;
    }
    let scale = if b.height() >= 40 && b.width() >= 60 {
        2
    } else {
        1
    };
    let cell_w = 6 * scale;
    let cell_h = 8 * scale;
    let per_line = ((b.width() - 2 * pad + scale) / cell_w).max(1);
    let lines = ((b.height() - 2 * pad + scale) / cell_h).max(1);
    let ink_color = [ink(color[0]), ink(color[1]), ink(color[2])];
    for (i, ch) in text.chars().enumerate() {
        let i = i as u32;
        let (row, col) = (i / per_line, i % per_line);
        if row >= lines {
            break;
        }
        let pattern = glyph(ch);
        let ox = b.x_min + pad + col * cell_w;
        let oy = b.y_min + pad + row * cell_h;
        for r in 0..7u32 {
            for c in 0..5u32 {
                if pattern >> (r * 5 + c) & 1 == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let (x, y) = (ox + c * scale + dx, oy + r * scale + dy);
                        if x < b.x_max && y < b.y_max {
                            img.put_pixel(x, y, Rgb(ink_color));
                        }
                    }
                }
            }
        }
    }
}

/// Paint order: underlays first, then the remaining elements in layout order.
pub fn paint_order(layout: &Layout) -> Vec<usize> {
    let (under, rest): (Vec<usize>, Vec<usize>) =
        (0..layout.len()).partition(|&i| layout.elements[i].category.is_underlay());
    under.into_iter().chain(rest).collect()
}

/// Visualization branch: color blocks over the background (or a white
/// canvas for background-free tasks), with content glyphs stamped inside the
/// boxes on content-constrained tasks.
pub fn visualize(layout: &Layout, ctx: &SceneContext, cmap: &ColorMap) -> Result<RgbImage> {
    let mut img = base_image(layout, ctx)?;
    let show_content = layout.task.content_constrained();
    for i in paint_order(layout) {
        let e: &Element = &layout.elements[i];
        let color = cmap.color(&e.category);
        paint_block(&mut img, &e.bbox, color);
        if show_content {
            if let Some(text) = &e.content {
                stamp_text(&mut img, &e.bbox, text, color);
            }
        }
    }
    Ok(img)
}

/// Geometry branch: one descriptive line per element followed by summary lines.
pub fn geometry_prompt(layout: &Layout, cmap: &ColorMap) -> String {
    let mut out = String::new();
    for (i, e) in layout.elements.iter().enumerate() {
        let b = &e.bbox;
        let (cx, cy) = b.normalized_center(layout.canvas_w, layout.canvas_h);
        let _ = write!(
            out,
            "[{i}] {} color={} box=[{}, {}, {}, {}] width={} height={} area={} center=({cx:.4}, {cy:.4})",
            e.category,
            cmap.color_name(&e.category),
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max,
            b.width(),
            b.height(),
            b.area()
        );
        if let Some(c) = &e.content {
            let _ = write!(out, " content={c:?}");
        }
        out.push('\n');
    }
    let covered = if layout.canvas_area() == 0 {
        0.0
    } else {
        CoverageMask::from_boxes(layout.canvas_w, layout.canvas_h, layout.boxes()).count() as f64
            / layout.canvas_area() as f64
    };
    let _ = writeln!(out, "elements: {}", layout.len());
    let _ = writeln!(out, "covered_area_fraction: {covered:.4}");
    out
}

/// Runs both branches, returning the geometry text and the enhanced image.
pub fn dual_branch(
    layout: &Layout,
    ctx: &SceneContext,
    cmap: &ColorMap,
) -> Result<(String, RgbImage)> {
    let image = visualize(layout, ctx, cmap)?;
    Ok((geometry_prompt(layout, cmap), image))
}
