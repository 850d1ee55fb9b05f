//! Background-aware composition metrics.

use image::GrayImage;

use crate::error::{Error, Result};
use crate::geometry::CoverageMask;
use crate::layout::{Layout, SceneContext};

/// Normalizer that maps the Sobel magnitude of an 8-bit image into [0, 1].
pub const SOBEL_NORM: f64 = 4.0 * std::f64::consts::SQRT_2 * 255.0;

/// Normalized Sobel gradient magnitude at `(x, y)`, replicating border pixels.
pub fn sobel_magnitude(img: &GrayImage, x: u32, y: u32) -> f64 {
    let (w, h) = img.dimensions();
    let px = |dx: i64, dy: i64| -> f64 {
        let xx = (i64::from(x) + dx).clamp(0, i64::from(w) - 1) as u32;
        let yy = (i64::from(y) + dy).clamp(0, i64::from(h) - 1) as u32;
        f64::from(img.get_pixel(xx, yy)[0])
    };
    let gx = (px(1, -1) + 2.0 * px(1, 0) + px(1, 1)) - (px(-1, -1) + 2.0 * px(-1, 0) + px(-1, 1));
    let gy = (px(-1, 1) + 2.0 * px(0, 1) + px(1, 1)) - (px(-1, -1) + 2.0 * px(0, -1) + px(1, -1));
    (gx * gx + gy * gy).sqrt() / SOBEL_NORM
}

/// Readability clutter: 100 x mean normalized gradient magnitude under the
/// union of text, title and logo boxes. Lower is better.
pub fn r_com(layout: &Layout, ctx: &SceneContext) -> Result<f64> {
    let bg = ctx
        .background
        .as_ref()
        .ok_or(Error::MissingBackground("r_com needs a background raster"))?;
    check_dims(layout, bg.width(), bg.height())?;
    let mask = CoverageMask::from_boxes(
        layout.canvas_w,
        layout.canvas_h,
        layout
            .elements
            .iter()
            .filter(|e| e.category.is_readable())
            .map(|e| &e.bbox),
    );
    let mut sum = 0.0;
    let mut n = 0u64;
    for (x, y) in mask.covered() {
        sum += sobel_magnitude(bg, x, y);
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { 100.0 * sum / n as f64 })
}

/// Subject occlusion: mean saliency under the union of all element boxes.
/// Lower is better.
pub fn r_sub(layout: &Layout, ctx: &SceneContext) -> Result<f64> {
    let sal = ctx
        .saliency
        .as_ref()
        .ok_or(Error::MissingSaliency("r_sub needs a saliency map"))?;
    check_dims(layout, sal.width(), sal.height())?;
    let mask = CoverageMask::from_boxes(layout.canvas_w, layout.canvas_h, layout.boxes());
    let mut sum = 0.0;
    let mut n = 0u64;
    for (x, y) in mask.covered() {
        sum += sal.get(x, y);
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Fraction of layouts with at least one element. Higher is better.
pub fn r_occ(batch: &[Layout]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let occupied = batch.iter().filter(|l| !l.is_empty()).count();
    Ok(occupied as f64 / batch.len() as f64)
}

fn check_dims(layout: &Layout, w: u32, h: u32) -> Result<()> {
    if (w, h) != (layout.canvas_w, layout.canvas_h) {
        return Err(Error::DimensionMismatch {
            want_w: layout.canvas_w,
            want_h: layout.canvas_h,
            got_w: w,
            got_h: h,
        });
    }
    Ok(())
}
