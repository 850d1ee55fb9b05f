//! C ABI over the layout toolkit.
//!
//! Every fallible function returns a [`UlStatus`] and writes its result
//! through an out-pointer. On failure, [`ul_last_error`] describes the most
//! recent error on the calling thread. Handles are opaque and must be
//! released with their `_free` function; strings returned by the library are
//! released with [`ul_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use unilayout::dmpo::loss::{f_transform, loss_from_log_ratios, MarginKind};
use unilayout::io::{load_layout_file, parse_layout_json, LayoutDoc};
use unilayout::prompt::{parse_layout, serialize_layout};
use unilayout::qualify::{self, RuleConfig, Verdict};
use unilayout::{metrics, BBox, Category, Error, Layout, SceneContext, TaskKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed layout, configuration or document.
    InvalidInput = 3,
    Io = 4,
    OutOfRange = 5,
    Internal = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UlTask {
    Bfef = 0,
    Bcef = 1,
    Bfec = 2,
    Bcec = 3,
}

impl From<UlTask> for TaskKind {
    fn from(t: UlTask) -> Self {
        match t {
            UlTask::Bfef => TaskKind::Bfef,
            UlTask::Bcef => TaskKind::Bcef,
            UlTask::Bfec => TaskKind::Bfec,
            UlTask::Bcec => TaskKind::Bcec,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UlMargin {
    Dpo = 0,
    Fixed = 1,
    Dynamic = 2,
}

/// A layout together with its optional background and saliency map.
pub struct UlLayout {
    layout: Layout,
    ctx: SceneContext,
}

/// The outcome of judging a layout.
pub struct UlVerdict {
    verdict: Verdict,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> UlStatus {
    match e {
        Error::Io { .. } | Error::Image { .. } => UlStatus::Io,
        Error::ScoreOutOfRange(_) => UlStatus::OutOfRange,
        e if !e.is_input_error() => UlStatus::Internal,
        _ => UlStatus::InvalidInput,
    }
}

struct Fail(UlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(UlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, catching panics and recording errors.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(UlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn boxed(layout: Layout, ctx: SceneContext) -> *mut UlLayout {
    Box::into_raw(Box::new(UlLayout { layout, ctx }))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ul_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ul_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ul_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an empty layout.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_new(canvas_w: u32, canvas_h: u32, task: UlTask, out: *mut *mut UlLayout) -> UlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = boxed(Layout::new(canvas_w, canvas_h, task.into()), SceneContext::empty());
        Ok(())
    })
}

/// Parses a layout document from JSON. Raster paths in the document are
/// ignored; use [`ul_layout_load`] to read them.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_from_json(json: *const c_char, out: *mut *mut UlLayout) -> UlStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let doc = parse_layout_json(text).map_err(|e| Fail(UlStatus::InvalidInput, e.to_string()))?;
        *out = boxed(doc.layout(), SceneContext::empty());
        Ok(())
    })
}

/// Reads a layout file together with its raster sidecars.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_load(path: *const c_char, out: *mut *mut UlLayout) -> UlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let (layout, ctx) = load_layout_file(Path::new(path))?;
        *out = boxed(layout, ctx);
        Ok(())
    })
}

/// Parses model output in the layout grammar.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_parse(
    text: *const c_char,
    canvas_w: u32,
    canvas_h: u32,
    task: UlTask,
    out: *mut *mut UlLayout,
) -> UlStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let parsed = parse_layout(text, canvas_w, canvas_h, task.into())?;
        *out = boxed(parsed.layout, SceneContext::empty());
        Ok(())
    })
}

/// Releases a layout. NULL is ignored.
///
/// # Safety
/// `layout` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_free(layout: *mut UlLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// Appends an element with box `[x_min, x_max) x [y_min, y_max)`.
///
/// # Safety
/// `layout` must be a live handle and `category` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_push(
    layout: *mut UlLayout,
    category: *const c_char,
    x_min: u32,
    y_min: u32,
    x_max: u32,
    y_max: u32,
) -> UlStatus {
    guard(|| {
        let l = out_arg(layout, "layout")?;
        let name = str_arg(category, "category")?;
        let cat = Category::parse(name).ok_or_else(|| Fail(UlStatus::InvalidInput, format!("bad category {name:?}")))?;
        l.layout.push(cat, BBox::new(x_min, y_min, x_max, y_max));
        Ok(())
    })
}

/// Number of elements.
///
/// # Safety
/// `layout` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_len(layout: *const UlLayout, out: *mut usize) -> UlStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(layout, "layout")?.layout.len();
        Ok(())
    })
}

/// Layout document as JSON; free with [`ul_string_free`].
///
/// # Safety
/// `layout` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_to_json(layout: *const UlLayout, out: *mut *mut c_char) -> UlStatus {
    guard(|| {
        let l = ref_arg(layout, "layout")?;
        let out = out_arg(out, "out")?;
        let text = serde_json::to_string(&LayoutDoc::from_layout(&l.layout)).map_err(|e| Fail(UlStatus::Internal, e.to_string()))?;
        *out = c_string(text);
        Ok(())
    })
}

/// Layout in the prompt grammar; free with [`ul_string_free`].
///
/// # Safety
/// `layout` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_layout_serialize(layout: *const UlLayout, out: *mut *mut c_char) -> UlStatus {
    guard(|| {
        let l = ref_arg(layout, "layout")?;
        *out_arg(out, "out")? = c_string(serialize_layout(&l.layout));
        Ok(())
    })
}

/// Judges a layout. `config_toml` may be NULL for the default rule set.
///
/// # Safety
/// `layout` must be a live handle, `config_toml` NULL or a NUL-terminated
/// string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_qualify(layout: *const UlLayout, config_toml: *const c_char, out: *mut *mut UlVerdict) -> UlStatus {
    guard(|| {
        let l = ref_arg(layout, "layout")?;
        let out = out_arg(out, "out")?;
        let cfg = if config_toml.is_null() {
            RuleConfig::default()
        } else {
            RuleConfig::from_toml_str(str_arg(config_toml, "config_toml")?)?
        };
        let verdict = qualify::qualify(&l.layout, &l.ctx, &cfg)?;
        *out = Box::into_raw(Box::new(UlVerdict { verdict }));
        Ok(())
    })
}

/// Releases a verdict. NULL is ignored.
///
/// # Safety
/// `verdict` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ul_verdict_free(verdict: *mut UlVerdict) {
    if !verdict.is_null() {
        drop(Box::from_raw(verdict));
    }
}

/// # Safety
/// `verdict` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_verdict_is_qualified(verdict: *const UlVerdict, out: *mut bool) -> UlStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(verdict, "verdict")?.verdict.is_qualified();
        Ok(())
    })
}

/// Layout reward in `[0, 1]`.
///
/// # Safety
/// `verdict` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_verdict_score(verdict: *const UlVerdict, out: *mut f64) -> UlStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(verdict, "verdict")?.verdict.score;
        Ok(())
    })
}

/// # Safety
/// `verdict` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_verdict_violation_count(verdict: *const UlVerdict, out: *mut usize) -> UlStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(verdict, "verdict")?.verdict.violations.len();
        Ok(())
    })
}

/// Full verdict with its report as JSON; free with [`ul_string_free`].
///
/// # Safety
/// `verdict` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_verdict_to_json(verdict: *const UlVerdict, out: *mut *mut c_char) -> UlStatus {
    guard(|| {
        let v = ref_arg(verdict, "verdict")?;
        *out_arg(out, "out")? = c_string(v.verdict.to_json());
        Ok(())
    })
}

/// Mean pairwise overlap of a layout.
///
/// # Safety
/// `layout` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_metric_overlap(layout: *const UlLayout, out: *mut f64) -> UlStatus {
    guard(|| {
        *out_arg(out, "out")? = metrics::overlap(&ref_arg(layout, "layout")?.layout);
        Ok(())
    })
}

/// Alignment score of a layout.
///
/// # Safety
/// `layout` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_metric_alignment(layout: *const UlLayout, out: *mut f64) -> UlStatus {
    guard(|| {
        *out_arg(out, "out")? = metrics::alignment(&ref_arg(layout, "layout")?.layout);
        Ok(())
    })
}

/// Maximum mean IoU between a generated layout and a reference.
///
/// # Safety
/// Both layouts must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_metric_max_iou(generated: *const UlLayout, reference: *const UlLayout, out: *mut f64) -> UlStatus {
    guard(|| {
        let g = ref_arg(generated, "generated")?;
        let r = ref_arg(reference, "reference")?;
        *out_arg(out, "out")? = metrics::max_iou(&g.layout, &r.layout);
        Ok(())
    })
}

/// The dynamic-margin transform `e^d - e^-d`.
#[no_mangle]
pub extern "C" fn ul_f_transform(delta: f64) -> f64 {
    f_transform(delta)
}

/// Preference loss from policy/reference log-ratios of winner and loser.
/// `fixed_margin` is read only for [`UlMargin::Fixed`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ul_preference_loss(
    kind: UlMargin,
    fixed_margin: f64,
    beta: f64,
    ratio_winner: f64,
    ratio_loser: f64,
    delta: f64,
    out: *mut f64,
) -> UlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Fail(UlStatus::OutOfRange, format!("beta must be positive, got {beta}")));
        }
        let kind = match kind {
            UlMargin::Dpo => MarginKind::Dpo,
            UlMargin::Fixed => MarginKind::Fixed(fixed_margin),
            UlMargin::Dynamic => MarginKind::Dynamic,
        };
        *out = loss_from_log_ratios(kind, beta, ratio_winner, ratio_loser, delta);
        Ok(())
    })
}
