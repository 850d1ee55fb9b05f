//! Layout generation toolkit: a shared layout model for four task families,
//! a rule-based layout evaluator, layout metrics, prompt construction and
//! parsing, a dual-branch renderer, and a preference-optimization trainer for
//! a small autoregressive layout generator.

pub mod cli;
pub mod dataset;
pub mod dmpo;
pub mod error;
pub mod geometry;
pub mod io;
pub mod layout;
pub mod metrics;
pub mod prompt;
pub mod qualify;
pub mod render;

pub use error::{Error, Result};
pub use geometry::BBox;
pub use layout::{validate, Category, Element, Fault, Layout, SaliencyMap, SceneContext, TaskKind};
