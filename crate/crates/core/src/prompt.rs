//! Instruction and prompt construction, plus the layout output grammar.
//!
//! Generated layouts are one element per line:
//!
//! ```text
//! 'text': [0, 0, 100, 50]
//! 'text': [0, 60, 100, 110], content: "Shop Now"
//! ```

use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::layout::{Category, Element, Layout, SceneContext, TaskKind};

pub const STOP: &str = "<STOP>";
pub const IMAGE: &str = "<image>";
pub const OUTPUT_FORMAT: &str = "'element_type': [x_min, y_min, x_max, y_max]";
pub const DEFAULT_CONTENT_LABEL: &str = "Selling point candidates";

/// Everything an instruction is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub task: TaskKind,
    /// Task description.
    pub description: String,
    pub canvas_w: u32,
    pub canvas_h: u32,
    /// Free-form background attributes appended to the canvas line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_notes: Option<String>,
    /// Reference to the background raster; required for background-constrained tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
    /// Allowed element categories, at least one.
    pub element_types: Vec<Category>,
    /// Candidate contents such as selling points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contents: Vec<String>,
    #[serde(default = "default_content_label")]
    pub content_label: String,
}

fn default_content_label() -> String {
    DEFAULT_CONTENT_LABEL.to_string()
}

impl TaskSpec {
    pub fn new(
        task: TaskKind,
        description: impl Into<String>,
        canvas_w: u32,
        canvas_h: u32,
    ) -> Self {
        TaskSpec {
            task,
            description: description.into(),
            canvas_w,
            canvas_h,
            background_notes: None,
            background: None,
            element_types: Vec::new(),
            contents: Vec::new(),
            content_label: default_content_label(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTaskSpec(m.to_string()));
        if self.element_types.is_empty() {
            return bad("at least one element type is required");
        }
        if self.canvas_w == 0 || self.canvas_h == 0 {
            return bad("canvas dimensions must be positive");
        }
        match (
            self.task.background_constrained(),
            self.background.is_some(),
        ) {
            (true, false) => return bad("background-constrained tasks need a background"),
            (false, true) => return bad("background-free tasks take no background"),
            _ => {}
        }
        match (self.task.content_constrained(), self.contents.is_empty()) {
            (true, true) => {
                return bad("content-constrained tasks need at least one content candidate")
            }
            (false, false) => return bad("content-free tasks take no content candidates"),
            _ => {}
        }
        Ok(())
    }
}

/// Joins names as `a`, `a and b`, or `a, b, and c`.
fn english_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unquote(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Builds the textual instruction: task, canvas, background, element types,
/// optional candidates, and output format, one per line.
pub fn build_instruction(spec: &TaskSpec) -> Result<String> {
    spec.validate()?;
    let mut lines = Vec::with_capacity(6);
    lines.push(format!("Task: {}", spec.description.trim()));
    let mut canvas = format!("Canvas size: {} × {} pixels.", spec.canvas_w, spec.canvas_h);
    if let Some(notes) = spec
        .background_notes
        .as_deref()
        .map(str::trim)
        .filter(|n| !n.is_empty())
    {
        let _ = write!(canvas, " {notes}");
    }
    lines.push(canvas);
    if spec.background.is_some() {
        lines.push("Background image: please see the given image.".to_string());
    }
    let names: Vec<String> = spec
        .element_types
        .iter()
        .map(|c| c.name().to_string())
        .collect();
    lines.push(format!("Element types: {}.", english_list(&names)));
    if !spec.contents.is_empty() {
        let quoted: Vec<String> = spec.contents.iter().map(|c| quote(c)).collect();
        lines.push(format!("{}: [{}].", spec.content_label, quoted.join(", ")));
    }
    lines.push(format!("Output format: {OUTPUT_FORMAT}."));
    Ok(lines.join("\n"))
}

/// Wraps an instruction in role tokens. The image placeholder and its line
/// break appear only for background-constrained tasks; a completion, when
/// given, is appended in the output grammar and terminated by `<STOP>`.
pub fn build_prompt(
    task: TaskKind,
    ctx: &SceneContext,
    instruction: &str,
    completion: Option<&Layout>,
) -> Result<String> {
    match (task.background_constrained(), ctx.background.is_some()) {
        (true, false) => {
            return Err(Error::MissingBackground(
                "background-constrained prompts embed the background image",
            ))
        }
        (false, true) => {
            return Err(Error::InvalidTaskSpec(format!(
                "{task} prompts take no background image"
            )))
        }
        _ => {}
    }
    let mut out = String::from("Human: ");
    if task.background_constrained() {
        out.push_str(IMAGE);
        out.push('\n');
    }
    out.push_str(instruction);
    out.push_str(STOP);
    out.push_str(" Assistant:");
    if let Some(l) = completion {
        out.push(' ');
        out.push_str(&serialize_layout(l));
        out.push_str(STOP);
    }
    Ok(out)
}

pub fn serialize_element(e: &Element) -> String {
    let b = &e.bbox;
    let mut s = format!(
        "'{}': [{}, {}, {}, {}]",
        e.category, b.x_min, b.y_min, b.x_max, b.y_max
    );
    if let Some(c) = &e.content {
        let _ = write!(s, ", content: {}", quote(c));
    }
    s
}

/// One line per element in layout order; empty string for an empty layout.
pub fn serialize_layout(layout: &Layout) -> String {
    layout
        .elements
        .iter()
        .map(serialize_element)
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLayout {
    pub layout: Layout,
    pub warnings: Vec<ParseWarning>,
}

fn line_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"^\s*['"]([^'"]+)['"]\s*:\s*\[\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\]\s*(?:,\s*content\s*:\s*"((?:[^"\\]|\\.)*)")?\s*,?\s*$"#,
        )
        .expect("valid regex")
    })
}

/// Parses model output in the layout grammar. Coordinates are clamped into
/// the canvas, boxes that become degenerate are dropped, and unparseable
/// lines are skipped; each of these is recorded as a warning. Fails only when
/// the text is non-blank yet contains no well-formed line.
pub fn parse_layout(
    text: &str,
    canvas_w: u32,
    canvas_h: u32,
    task: TaskKind,
) -> Result<ParsedLayout> {
    let mut layout = Layout::new(canvas_w, canvas_h, task);
    let mut warnings = Vec::new();
    let mut well_formed = 0usize;
    let clamp = |v: i64, max: u32| -> u32 { v.clamp(0, i64::from(max)) as u32 };
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_end_matches(STOP).trim();
        if line.is_empty() {
            continue;
        }
        let Some(caps) = line_pattern().captures(line) else {
            warnings.push(ParseWarning {
                line: n + 1,
                message: format!("unrecognized line {line:?}"),
            });
            continue;
        };
        let Some(category) = Category::parse(&caps[1]) else {
            warnings.push(ParseWarning {
                line: n + 1,
                message: format!("invalid category {:?}", &caps[1]),
            });
            continue;
        };
        well_formed += 1;
        let coords: Vec<i64> = (2..=5)
            .map(|i| caps[i].parse::<i64>().unwrap_or(i64::MAX))
            .collect();
        let bbox = BBox::new(
            clamp(coords[0], canvas_w),
            clamp(coords[1], canvas_h),
            clamp(coords[2], canvas_w),
            clamp(coords[3], canvas_h),
        );
        let unclamped = [coords[0], coords[1], coords[2], coords[3]];
        let clamped: [u32; 4] = bbox.into();
        if unclamped
            .iter()
            .zip(clamped.iter())
            .any(|(a, b)| *a != i64::from(*b))
        {
            warnings.push(ParseWarning {
                line: n + 1,
                message: format!("clamped box {unclamped:?} to {clamped:?}"),
            });
        }
        if !bbox.is_valid() {
            warnings.push(ParseWarning {
                line: n + 1,
                message: format!("dropped degenerate box {clamped:?}"),
            });
            continue;
        }
        let mut element = Element::new(category, bbox);
        element.content = caps.get(6).map(|m| unquote(m.as_str()));
        layout.elements.push(element);
    }
    if well_formed == 0 && !text.trim().is_empty() {
        let first_line = text
            .lines()
            .find(|l| !l.trim().is_empty())
            .unwrap_or("")
            .chars()
            .take(80)
            .collect();
        return Err(Error::UnrecoverableParse { first_line });
    }
    Ok(ParsedLayout { layout, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::GrayImage;

    fn sale_spec() -> TaskSpec {
        let mut s = TaskSpec::new(
            TaskKind::Bcec,
            "Create an engaging, product-focused layout using provided selling point elements.",
            513,
            750,
        );
        s.background = Some("background.png".into());
        s.element_types = vec![Category::Text, Category::Title, Category::Logo];
        s.contents = vec![
            "50% Off Today".into(),
            "Shop Now".into(),
            "Soft & Breathable".into(),
        ];
        s
    }

    #[test]
    fn bcec_instruction_matches_reference_example() {
        let expected = "Task: Create an engaging, product-focused layout using provided selling point elements.\n\
Canvas size: 513 × 750 pixels.\n\
Background image: please see the given image.\n\
Element types: text, title, and logo.\n\
Selling point candidates: [\"50% Off Today\", \"Shop Now\", \"Soft & Breathable\"].\n\
Output format: 'element_type': [x_min, y_min, x_max, y_max].";
        assert_eq!(build_instruction(&sale_spec()).unwrap(), expected);
    }

    #[test]
    fn bfef_instruction_omits_background_and_candidates() {
        let mut s = TaskSpec::new(TaskKind::Bfef, "Arrange a document page.", 513, 750);
        s.element_types = vec![Category::Text, Category::Title];
        let text = build_instruction(&s).unwrap();
        assert!(!text.contains("Background"));
        assert!(!text.contains("candidates"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn bfec_without_candidates_is_rejected() {
        let mut s = TaskSpec::new(TaskKind::Bfec, "x", 513, 750);
        s.element_types = vec![Category::Text];
        assert!(matches!(
            build_instruction(&s),
            Err(Error::InvalidTaskSpec(_))
        ));
        s.task = TaskKind::Bfef;
        s.contents = vec!["a".into()];
        assert!(build_instruction(&s).is_err());
    }

    #[test]
    fn prompt_templates() {
        let p = build_prompt(TaskKind::Bfef, &SceneContext::empty(), "INSTR", None).unwrap();
        assert_eq!(p, "Human: INSTR<STOP> Assistant:");
        let ctx = SceneContext::empty().with_background(GrayImage::new(513, 750));
        let mut l = Layout::with_default_canvas(TaskKind::Bcec);
        l.elements
            .push(Element::new(Category::Text, BBox::new(0, 0, 100, 50)).with_content("Shop Now"));
        let p = build_prompt(TaskKind::Bcec, &ctx, "INSTR", Some(&l)).unwrap();
        assert_eq!(
            p,
            "Human: <image>\nINSTR<STOP> Assistant: 'text': [0, 0, 100, 50], content: \"Shop Now\"<STOP>"
        );
        assert!(matches!(
            build_prompt(TaskKind::Bcef, &SceneContext::empty(), "INSTR", None),
            Err(Error::MissingBackground(_))
        ));
    }

    #[test]
    fn serialize_examples() {
        let mut l = Layout::with_default_canvas(TaskKind::Bfec);
        assert_eq!(serialize_layout(&l), "");
        l.push(Category::Text, BBox::new(0, 0, 100, 50));
        assert_eq!(serialize_layout(&l), "'text': [0, 0, 100, 50]");
        l.elements[0].content = Some("Shop Now".into());
        assert!(serialize_layout(&l).ends_with(", content: \"Shop Now\""));
    }

    #[test]
    fn parse_clamps_and_warns() {
        let p = parse_layout("'text': [0, 0, 9999, 50]", 513, 750, TaskKind::Bfef).unwrap();
        assert_eq!(p.layout.elements[0].bbox, BBox::new(0, 0, 513, 50));
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn parse_drops_degenerate_after_clamp() {
        let p = parse_layout(
            "'text': [600, 0, 700, 50]\n'title': [0, 0, 10, 10]",
            513,
            750,
            TaskKind::Bfef,
        )
        .unwrap();
        assert_eq!(p.layout.len(), 1);
        assert_eq!(p.layout.elements[0].category, Category::Title);
        assert_eq!(p.warnings.len(), 2);
    }

    #[test]
    fn garbage_is_unrecoverable_but_empty_is_fine() {
        assert!(matches!(
            parse_layout("the layout is lovely", 513, 750, TaskKind::Bfef),
            Err(Error::UnrecoverableParse { .. })
        ));
        let p = parse_layout("  \n", 513, 750, TaskKind::Bfef).unwrap();
        assert!(p.layout.is_empty());
    }

    #[test]
    fn parse_accepts_stop_and_escapes() {
        let text = "'text': [1, 2, 30, 40], content: \"say \\\"hi\\\"\"<STOP>";
        let p = parse_layout(text, 513, 750, TaskKind::Bfec).unwrap();
        assert_eq!(p.layout.elements[0].content.as_deref(), Some("say \"hi\""));
        assert!(p.warnings.is_empty());
    }
}
