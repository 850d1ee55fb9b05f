//! Layout data model: categories, elements, task kinds and scene context.

use std::fmt;
use std::str::FromStr;

use image::GrayImage;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::BBox;

pub const DEFAULT_CANVAS_W: u32 = 513;
pub const DEFAULT_CANVAS_H: u32 = 750;

/// Element category. Names outside the known taxonomy are kept verbatim as
/// [`Category::Other`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Logo,
    Text,
    Underlay,
    Embellishment,
    Title,
    List,
    Table,
    Figure,
    Product,
    Other(String),
}

impl Category {
    pub const KNOWN: [Category; 9] = [
        Category::Logo,
        Category::Text,
        Category::Underlay,
        Category::Embellishment,
        Category::Title,
        Category::List,
        Category::Table,
        Category::Figure,
        Category::Product,
    ];

    /// Parses a category name, lowercasing it. Returns `None` for empty or
    /// whitespace-bearing names.
    pub fn parse(name: &str) -> Option<Category> {
        let name = name.trim().to_lowercase();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return None;
        }
        Some(match name.as_str() {
            "logo" => Category::Logo,
            "text" => Category::Text,
            "underlay" => Category::Underlay,
            "embellishment" => Category::Embellishment,
            "title" => Category::Title,
            "list" => Category::List,
            "table" => Category::Table,
            "figure" => Category::Figure,
            "product" => Category::Product,
            _ => Category::Other(name),
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Category::Logo => "logo",
            Category::Text => "text",
            Category::Underlay => "underlay",
            Category::Embellishment => "embellishment",
            Category::Title => "title",
            Category::List => "list",
            Category::Table => "table",
            Category::Figure => "figure",
            Category::Product => "product",
            Category::Other(s) => s,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Category::Other(_))
    }

    pub fn is_underlay(&self) -> bool {
        matches!(self, Category::Underlay)
    }

    /// Text-bearing categories whose legibility depends on the background.
    pub fn is_readable(&self) -> bool {
        matches!(self, Category::Text | Category::Title | Category::Logo)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Category::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid category name {s:?}")))
    }
}

/// The four task families: background free/constrained crossed with element
/// content free/constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Bfef,
    Bcef,
    Bfec,
    Bcec,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Bfef,
        TaskKind::Bcef,
        TaskKind::Bfec,
        TaskKind::Bcec,
    ];

    pub fn background_constrained(self) -> bool {
        matches!(self, TaskKind::Bcef | TaskKind::Bcec)
    }

    pub fn content_constrained(self) -> bool {
        matches!(self, TaskKind::Bfec | TaskKind::Bcec)
    }

    pub fn index(self) -> usize {
        match self {
            TaskKind::Bfef => 0,
            TaskKind::Bcef => 1,
            TaskKind::Bfec => 2,
            TaskKind::Bcec => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Bfef => "bfef",
            TaskKind::Bcef => "bcef",
            TaskKind::Bfec => "bfec",
            TaskKind::Bcec => "bcec",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_uppercase())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bfef" => Ok(TaskKind::Bfef),
            "bcef" => Ok(TaskKind::Bcef),
            "bfec" => Ok(TaskKind::Bfec),
            "bcec" => Ok(TaskKind::Bcec),
            other => Err(format!(
                "unknown task kind {other:?} (expected bfef, bcef, bfec or bcec)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub category: Category,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
}

impl Element {
    pub fn new(category: Category, bbox: BBox) -> Self {
        Element {
            category,
            bbox,
            content: None,
        }
    }

    pub fn with_content(mut self, content: impl Into<String>) -> Self {
        self.content = Some(content.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub task: TaskKind,
    pub elements: Vec<Element>,
}

impl Layout {
    pub fn new(canvas_w: u32, canvas_h: u32, task: TaskKind) -> Self {
        Layout {
            canvas_w,
            canvas_h,
            task,
            elements: Vec::new(),
        }
    }

    /// An empty layout on the default 513 x 750 canvas.
    pub fn with_default_canvas(task: TaskKind) -> Self {
        Layout::new(DEFAULT_CANVAS_W, DEFAULT_CANVAS_H, task)
    }

    pub fn push(&mut self, category: Category, bbox: BBox) -> &mut Self {
        self.elements.push(Element::new(category, bbox));
        self
    }

    pub fn canvas_area(&self) -> u64 {
        u64::from(self.canvas_w) * u64::from(self.canvas_h)
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn boxes(&self) -> impl Iterator<Item = &BBox> {
        self.elements.iter().map(|e| &e.bbox)
    }
}

/// Per-pixel saliency in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            width as usize * height as usize,
            "saliency buffer size"
        );
        SaliencyMap {
            width,
            height,
            values,
        }
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Self {
        SaliencyMap::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Saliency from an 8-bit mask: value = pixel / 255.
    pub fn from_gray(img: &GrayImage) -> Self {
        let values = img.as_raw().iter().map(|&p| f64::from(p) / 255.0).collect();
        SaliencyMap::new(img.width(), img.height(), values)
    }

    /// Quantizes back to an 8-bit mask.
    pub fn to_gray(&self) -> GrayImage {
        let raw = self
            .values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        GrayImage::from_raw(self.width, self.height, raw).expect("buffer size matches")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        self.values[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Visual inputs accompanying a layout: a grayscale background and a saliency map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneContext {
    pub background: Option<GrayImage>,
    pub saliency: Option<SaliencyMap>,
}

impl SceneContext {
    pub fn empty() -> Self {
        SceneContext::default()
    }

    pub fn with_background(mut self, bg: GrayImage) -> Self {
        self.background = Some(bg);
        self
    }

    pub fn with_saliency(mut self, s: SaliencyMap) -> Self {
        self.saliency = Some(s);
        self
    }

    /// Mean background intensity in `[0, 255]`, if a background is present.
    pub fn mean_brightness(&self) -> Option<f64> {
        let bg = self.background.as_ref()?;
        let raw = bg.as_raw();
        if raw.is_empty() {
            return None;
        }
        let sum: u64 = raw.iter().map(|&p| u64::from(p)).sum();
        Some(sum as f64 / raw.len() as f64)
    }
}

/// A structural problem that keeps a layout from satisfying its type invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fault {
    EmptyCanvas { w: u32, h: u32 },
    DegenerateBox { element: usize },
    OutOfCanvas { element: usize },
    BackgroundSize { w: u32, h: u32 },
    SaliencySize { w: u32, h: u32 },
    UnexpectedContent { element: usize },
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::EmptyCanvas { w, h } => write!(f, "canvas {w}x{h} has zero area"),
            Fault::DegenerateBox { element } => write!(f, "element {element} has a degenerate box"),
            Fault::OutOfCanvas { element } => {
                write!(f, "element {element} extends outside the canvas")
            }
            Fault::BackgroundSize { w, h } => write!(f, "background is {w}x{h}, canvas differs"),
            Fault::SaliencySize { w, h } => write!(f, "saliency map is {w}x{h}, canvas differs"),
            Fault::UnexpectedContent { element } => {
                write!(
                    f,
                    "element {element} carries content on a content-free task"
                )
            }
        }
    }
}

/// Lists every structural fault; an empty result means the layout is well formed.
pub fn validate(layout: &Layout, ctx: &SceneContext) -> Vec<Fault> {
    let mut faults = Vec::new();
    if layout.canvas_w == 0 || layout.canvas_h == 0 {
        faults.push(Fault::EmptyCanvas {
            w: layout.canvas_w,
            h: layout.canvas_h,
        });
    }
    for (i, e) in layout.elements.iter().enumerate() {
        if !e.bbox.is_valid() {
            faults.push(Fault::DegenerateBox { element: i });
        } else if !e.bbox.fits_in(layout.canvas_w, layout.canvas_h) {
            faults.push(Fault::OutOfCanvas { element: i });
        }
        if e.content.is_some() && !layout.task.content_constrained() {
            faults.push(Fault::UnexpectedContent { element: i });
        }
    }
    if let Some(bg) = &ctx.background {
        if bg.dimensions() != (layout.canvas_w, layout.canvas_h) {
            faults.push(Fault::BackgroundSize {
                w: bg.width(),
                h: bg.height(),
            });
        }
    }
    if let Some(s) = &ctx.saliency {
        if (s.width(), s.height()) != (layout.canvas_w, layout.canvas_h) {
            faults.push(Fault::SaliencySize {
                w: s.width(),
                h: s.height(),
            });
        }
    }
    faults
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Layout {
        let mut l = Layout::with_default_canvas(TaskKind::Bfef);
        l.push(Category::Text, BBox::new(10, 10, 200, 60));
        l.push(Category::Title, BBox::new(10, 80, 300, 140));
        l
    }

    #[test]
    fn well_formed_layout_has_no_faults() {
        assert!(validate(&sample(), &SceneContext::empty()).is_empty());
    }

    #[test]
    fn out_of_canvas_box_is_reported() {
        let mut l = sample();
        l.push(Category::Text, BBox::new(0, 0, 600, 100));
        assert_eq!(
            validate(&l, &SceneContext::empty()),
            vec![Fault::OutOfCanvas { element: 2 }]
        );
    }

    #[test]
    fn saliency_size_mismatch_is_reported() {
        let mut l = sample();
        l.task = TaskKind::Bcef;
        let ctx = SceneContext::empty()
            .with_background(GrayImage::new(513, 750))
            .with_saliency(SaliencyMap::filled(100, 100, 0.0));
        assert_eq!(
            validate(&l, &ctx),
            vec![Fault::SaliencySize { w: 100, h: 100 }]
        );
    }

    #[test]
    fn content_on_free_task_is_reported() {
        let mut l = sample();
        l.elements[0].content = Some("Shop Now".into());
        assert_eq!(
            validate(&l, &SceneContext::empty()),
            vec![Fault::UnexpectedContent { element: 0 }]
        );
        l.task = TaskKind::Bfec;
        assert!(validate(&l, &SceneContext::empty()).is_empty());
    }

    #[test]
    fn degenerate_box_is_reported() {
        let mut l = sample();
        l.push(Category::Text, BBox::new(5, 5, 5, 9));
        assert_eq!(
            validate(&l, &SceneContext::empty()),
            vec![Fault::DegenerateBox { element: 2 }]
        );
    }

    #[test]
    fn unknown_category_is_preserved() {
        let c = Category::parse("Sticker").unwrap();
        assert_eq!(c, Category::Other("sticker".into()));
        assert!(!c.is_known());
        assert_eq!(c.name(), "sticker");
        assert!(Category::parse("").is_none());
        assert!(Category::parse("two words").is_none());
    }

    #[test]
    fn task_kind_parsing() {
        assert_eq!("BCEC".parse::<TaskKind>().unwrap(), TaskKind::Bcec);
        assert!("xyz".parse::<TaskKind>().is_err());
        assert!(TaskKind::Bcef.background_constrained());
        assert!(!TaskKind::Bcef.content_constrained());
    }
}
