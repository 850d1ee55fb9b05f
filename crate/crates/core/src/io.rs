//! Layout documents on disk and raster I/O.
//!
//! A layout file is JSON:
//!
//! ```json
//! {
//!   "canvas": {"w": 513, "h": 750},
//!   "task": "bcec",
//!   "elements": [{"category": "text", "bbox": [0, 0, 100, 50], "content": "Shop Now"}],
//!   "background_path": "bg.pgm",
//!   "saliency_path": "sal.pgm"
//! }
//! ```
//!
//! Raster paths are resolved relative to the layout file. Rasters are 8-bit
//! grayscale PNG or PNM files; saliency is pixel / 255.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{
    Element, Layout, SaliencyMap, SceneContext, TaskKind, DEFAULT_CANVAS_H, DEFAULT_CANVAS_W,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub w: u32,
    pub h: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas {
            w: DEFAULT_CANVAS_W,
            h: DEFAULT_CANVAS_H,
        }
    }
}

/// Serialized form of a layout with optional raster sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDoc {
    #[serde(default)]
    pub canvas: Canvas,
    pub task: TaskKind,
    #[serde(default)]
    pub elements: Vec<Element>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency_path: Option<String>,
}

impl LayoutDoc {
    pub fn from_layout(layout: &Layout) -> Self {
        LayoutDoc {
            canvas: Canvas {
                w: layout.canvas_w,
                h: layout.canvas_h,
            },
            task: layout.task,
            elements: layout.elements.clone(),
            background_path: None,
            saliency_path: None,
        }
    }

    pub fn layout(&self) -> Layout {
        Layout {
            canvas_w: self.canvas.w,
            canvas_h: self.canvas.h,
            task: self.task,
            elements: self.elements.clone(),
        }
    }

    /// Loads referenced rasters, resolving relative paths against `base_dir`.
    pub fn load_context(&self, base_dir: &Path) -> Result<SceneContext> {
        let mut ctx = SceneContext::empty();
        if let Some(p) = &self.background_path {
            ctx.background = Some(load_gray(&base_dir.join(p))?);
        }
        if let Some(p) = &self.saliency_path {
            ctx.saliency = Some(SaliencyMap::from_gray(&load_gray(&base_dir.join(p))?));
        }
        Ok(ctx)
    }
}

pub fn parse_layout_json(text: &str) -> serde_json::Result<LayoutDoc> {
    serde_json::from_str(text)
}

/// Reads a layout file and its raster sidecars.
pub fn load_layout_file(path: &Path) -> Result<(Layout, SceneContext)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc = parse_layout_json(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let ctx = doc.load_context(base)?;
    Ok((doc.layout(), ctx))
}

/// Writes a layout document without sidecars.
pub fn save_layout_file(path: &Path, layout: &Layout) -> Result<()> {
    let doc = LayoutDoc::from_layout(layout);
    let text = serde_json::to_string_pretty(&doc).expect("layout doc serializes");
    write_atomic(path, text.as_bytes())
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_luma8())
}

/// Binary PGM (P5) bytes.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

/// Binary PPM (P6) bytes.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

pub fn encode_png_rgb(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: PathBuf::from("<png>"),
            source,
        })?;
    Ok(buf.into_inner())
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::Category;

    #[test]
    fn canvas_defaults_when_missing() {
        let doc = parse_layout_json(r#"{"task": "bfef", "elements": []}"#).unwrap();
        assert_eq!(doc.canvas, Canvas { w: 513, h: 750 });
    }

    #[test]
    fn element_fields_parse() {
        let doc = parse_layout_json(
            r#"{"canvas": {"w": 100, "h": 80}, "task": "bfec",
                "elements": [{"category": "Text", "bbox": [1, 2, 30, 40], "content": "Shop Now"}]}"#,
        )
        .unwrap();
        let l = doc.layout();
        assert_eq!(l.elements[0].category, Category::Text);
        assert_eq!(l.elements[0].bbox, BBox::new(1, 2, 30, 40));
        assert_eq!(l.elements[0].content.as_deref(), Some("Shop Now"));
    }

    #[test]
    fn rasters_roundtrip_through_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let mut bg = GrayImage::new(4, 3);
        bg.put_pixel(1, 1, image::Luma([200]));
        fs::write(dir.path().join("bg.pgm"), encode_pgm(&bg)).unwrap();
        let mut doc = LayoutDoc::from_layout(&Layout::new(4, 3, TaskKind::Bcef));
        doc.background_path = Some("bg.pgm".into());
        doc.saliency_path = Some("bg.pgm".into());
        let path = dir.path().join("l.json");
        fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        let (_, ctx) = load_layout_file(&path).unwrap();
        assert_eq!(ctx.background.unwrap(), bg);
        assert!((ctx.saliency.unwrap().get(1, 1) - 200.0 / 255.0).abs() < 1e-12);
    }
}
