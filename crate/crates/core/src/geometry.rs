//! Half-open integer pixel boxes.
//!
//! A [`BBox`] covers the pixels `[x_min, x_max) x [y_min, y_max)`, so areas are
//! exact integers and boxes that only share an edge do not overlap.

use serde::{Deserialize, Serialize};

/// An axis-aligned pixel box, serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl From<[u32; 4]> for BBox {
    fn from(v: [u32; 4]) -> Self {
        BBox {
            x_min: v[0],
            y_min: v[1],
            x_max: v[2],
            y_max: v[3],
        }
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// The six alignment axes of a box in normalized canvas coordinates:
/// left, horizontal center, right, top, vertical center, bottom.
pub type Axes = [f64; 6];

impl BBox {
    pub const fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Self {
        BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn from_xywh(x: u32, y: u32, w: u32, h: u32) -> Self {
        BBox::new(x, y, x + w, y + h)
    }

    /// True when the box has strictly positive area.
    pub fn is_valid(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    pub fn width(&self) -> u32 {
        self.x_max.saturating_sub(self.x_min)
    }

    pub fn height(&self) -> u32 {
        self.y_max.saturating_sub(self.y_min)
    }

    /// Pixel count; zero for degenerate boxes.
    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// The largest box contained in both, or `None` when the interiors are disjoint.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let b = BBox::new(
            self.x_min.max(other.x_min),
            self.y_min.max(other.y_min),
            self.x_max.min(other.x_max),
            self.y_max.min(other.y_max),
        );
        b.is_valid().then_some(b)
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        self.intersect(other).map_or(0, |b| b.area())
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    /// Whether `other` lies entirely inside `self`.
    pub fn contains(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn contains_pixel(&self, x: u32, y: u32) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }

    pub fn fits_in(&self, canvas_w: u32, canvas_h: u32) -> bool {
        self.x_max <= canvas_w && self.y_max <= canvas_h
    }

    /// Center in pixel units.
    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.x_min) + f64::from(self.x_max)) / 2.0,
            (f64::from(self.y_min) + f64::from(self.y_max)) / 2.0,
        )
    }

    pub fn normalized_center(&self, canvas_w: u32, canvas_h: u32) -> (f64, f64) {
        let (cx, cy) = self.center();
        (cx / f64::from(canvas_w), cy / f64::from(canvas_h))
    }

    pub fn axes(&self, canvas_w: u32, canvas_h: u32) -> Axes {
        let w = f64::from(canvas_w);
        let h = f64::from(canvas_h);
        let (cx, cy) = self.center();
        [
            f64::from(self.x_min) / w,
            cx / w,
            f64::from(self.x_max) / w,
            f64::from(self.y_min) / h,
            cy / h,
            f64::from(self.y_max) / h,
        ]
    }

    /// Smallest same-axis gap between two boxes over the six alignment axes.
    pub fn min_axis_gap(&self, other: &BBox, canvas_w: u32, canvas_h: u32) -> f64 {
        let a = self.axes(canvas_w, canvas_h);
        let b = other.axes(canvas_w, canvas_h);
        a.iter()
            .zip(b.iter())
            .map(|(p, q)| (p - q).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pixel mask of a canvas, used for exact union coverage.
#[derive(Debug, Clone)]
pub struct CoverageMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl CoverageMask {
    pub fn new(width: u32, height: u32) -> Self {
        CoverageMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    /// Marks every pixel of `b` that lies on the canvas.
    pub fn paint(&mut self, b: &BBox) {
        let x1 = b.x_max.min(self.width);
        let y1 = b.y_max.min(self.height);
        for y in b.y_min..y1 {
            let row = y as usize * self.width as usize;
            for x in b.x_min..x1 {
                self.bits[row + x as usize] = true;
            }
        }
    }

    pub fn from_boxes<'a>(
        width: u32,
        height: u32,
        boxes: impl IntoIterator<Item = &'a BBox>,
    ) -> Self {
        let mut m = CoverageMask::new(width, height);
        for b in boxes {
            m.paint(b);
        }
        m
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|b| **b).count() as u64
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major iterator over covered pixel coordinates.
    pub fn covered(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }
}
