//! Layout token streams.
//!
//! A layout becomes `BOS (category x_min y_min x_max y_max SEP)* EOS`, with
//! each coordinate quantized to one of `grid` bins along its axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::layout::{Category, Element, Layout, TaskKind};

pub type Token = u16;

pub const BOS: Token = 0;
pub const EOS: Token = 1;
pub const SEP: Token = 2;
const FIRST_CATEGORY: Token = 3;

/// Tokens per element: category, four coordinates, separator.
pub const ELEMENT_TOKENS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenScheme {
    pub grid: u32,
    pub categories: Vec<Category>,
    pub max_elements: usize,
}

impl Default for TokenScheme {
    fn default() -> Self {
        TokenScheme {
            grid: 32,
            categories: Category::KNOWN.to_vec(),
            max_elements: 8,
        }
    }
}

/// A decoded element with real-valued bin-center coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedElement {
    pub category: Category,
    pub bins: [u32; 4],
    pub centers: [f64; 4],
}

impl TokenScheme {
    pub fn new(grid: u32, max_elements: usize) -> Self {
        TokenScheme {
            grid,
            max_elements,
            ..TokenScheme::default()
        }
    }

    pub fn vocab_size(&self) -> usize {
        FIRST_CATEGORY as usize + self.categories.len() + self.grid as usize
    }

    /// Longest token stream: BOS, every element, EOS.
    pub fn max_len(&self) -> usize {
        2 + ELEMENT_TOKENS * self.max_elements
    }

    fn first_bin(&self) -> Token {
        FIRST_CATEGORY + self.categories.len() as Token
    }

    pub fn category_token(&self, c: &Category) -> Option<Token> {
        self.categories
            .iter()
            .position(|k| k == c)
            .map(|i| FIRST_CATEGORY + i as Token)
    }

    pub fn token_category(&self, t: Token) -> Option<&Category> {
        if t < FIRST_CATEGORY {
            return None;
        }
        self.categories.get((t - FIRST_CATEGORY) as usize)
    }

    pub fn bin_token(&self, bin: u32) -> Token {
        self.first_bin() + bin as Token
    }

    pub fn token_bin(&self, t: Token) -> Option<u32> {
        let first = self.first_bin();
        (t >= first && u32::from(t - first) < self.grid).then(|| u32::from(t - first))
    }

    pub fn is_category(&self, t: Token) -> bool {
        self.token_category(t).is_some()
    }

    /// `floor(grid * coord / dim)`, clamped to the last bin.
    pub fn quantize(&self, coord: u32, dim: u32) -> u32 {
        let bin = u64::from(self.grid) * u64::from(coord) / u64::from(dim);
        (bin as u32).min(self.grid - 1)
    }

    /// `(bin + 1/2) * dim / grid`, formed with a single rounding.
    pub fn bin_center(&self, bin: u32, dim: u32) -> f64 {
        ((2 * u64::from(bin) + 1) * u64::from(dim)) as f64 / (2 * u64::from(self.grid)) as f64
    }

    /// Half a bin width along an axis of length `dim`.
    pub fn half_bin(&self, dim: u32) -> f64 {
        f64::from(dim) / (2.0 * f64::from(self.grid))
    }

    pub fn tokenize(&self, layout: &Layout) -> Result<Vec<Token>> {
        if layout.len() > self.max_elements {
            return Err(Error::TooManyElements {
                max: self.max_elements,
                got: layout.len(),
            });
        }
        let (w, h) = (layout.canvas_w, layout.canvas_h);
        let mut out = Vec::with_capacity(2 + ELEMENT_TOKENS * layout.len());
        out.push(BOS);
        for e in &layout.elements {
            let cat = self
                .category_token(&e.category)
                .ok_or_else(|| Error::UnknownCategoryToken(e.category.name().to_string()))?;
            let b = &e.bbox;
            out.extend_from_slice(&[
                cat,
                self.bin_token(self.quantize(b.x_min, w)),
                self.bin_token(self.quantize(b.y_min, h)),
                self.bin_token(self.quantize(b.x_max, w)),
                self.bin_token(self.quantize(b.y_max, h)),
                SEP,
            ]);
        }
        out.push(EOS);
        Ok(out)
    }

    /// Parses a token stream into per-element bins and bin centers.
    pub fn decode(
        &self,
        tokens: &[Token],
        canvas_w: u32,
        canvas_h: u32,
    ) -> Result<Vec<DecodedElement>> {
        let bad = |position: usize, reason: &str| Error::MalformedTokens {
            position,
            reason: reason.to_string(),
        };
        if tokens.first() != Some(&BOS) {
            return Err(bad(0, "stream must start with BOS"));
        }
        let mut out = Vec::new();
        let mut i = 1;
        loop {
            match tokens.get(i) {
                None => return Err(bad(i, "stream ended without EOS")),
                Some(&EOS) => {
                    if i + 1 != tokens.len() {
                        return Err(bad(i + 1, "tokens after EOS"));
                    }
                    return Ok(out);
                }
                Some(&t) => {
                    let category = self
                        .token_category(t)
                        .ok_or_else(|| bad(i, "expected a category token or EOS"))?
                        .clone();
                    if out.len() == self.max_elements {
                        return Err(bad(i, "too many elements"));
                    }
                    let mut bins = [0u32; 4];
                    for (k, bin) in bins.iter_mut().enumerate() {
                        let tok = *tokens
                            .get(i + 1 + k)
                            .ok_or_else(|| bad(i + 1 + k, "truncated element"))?;
                        *bin = self
                            .token_bin(tok)
                            .ok_or_else(|| bad(i + 1 + k, "expected a coordinate token"))?;
                    }
                    if tokens.get(i + 5) != Some(&SEP) {
                        return Err(bad(i + 5, "expected SEP after coordinates"));
                    }
                    if bins[2] < bins[0] || bins[3] < bins[1] {
                        return Err(bad(i + 1, "box maximum precedes its minimum"));
                    }
                    let centers = [
                        self.bin_center(bins[0], canvas_w),
                        self.bin_center(bins[1], canvas_h),
                        self.bin_center(bins[2], canvas_w),
                        self.bin_center(bins[3], canvas_h),
                    ];
                    out.push(DecodedElement {
                        category,
                        bins,
                        centers,
                    });
                    i += ELEMENT_TOKENS;
                }
            }
        }
    }

    /// Inverts [`tokenize`](Self::tokenize) using bin centers rounded to whole
    /// pixels. A box whose two edges fall in the same bin is widened to one pixel.
    pub fn detokenize(
        &self,
        tokens: &[Token],
        canvas_w: u32,
        canvas_h: u32,
        task: TaskKind,
    ) -> Result<Layout> {
        let decoded = self.decode(tokens, canvas_w, canvas_h)?;
        let mut layout = Layout::new(canvas_w, canvas_h, task);
        for d in decoded {
            let px = |v: f64, dim: u32| (v.round() as u32).min(dim - 1);
            let x0 = px(d.centers[0], canvas_w);
            let y0 = px(d.centers[1], canvas_h);
            let x1 = px(d.centers[2], canvas_w).max(x0 + 1);
            let y1 = px(d.centers[3], canvas_h).max(y0 + 1);
            layout
                .elements
                .push(Element::new(d.category, BBox::new(x0, y0, x1, y1)));
        }
        Ok(layout)
    }
}
