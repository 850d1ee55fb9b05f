use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{alignment, max_iou, overlap, r_com, r_occ, r_sub};
use crate::error::{Error, Result};
use crate::layout::{Layout, SceneContext, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutMetrics {
    pub index: usize,
    pub task: TaskKind,
    pub ove: f64,
    pub ali: f64,
    pub max_iou: Option<f64>,
    pub r_com: Option<f64>,
    pub r_sub: Option<f64>,
    pub occupied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricMeans {
    pub ove: f64,
    pub ali: f64,
    pub max_iou: Option<f64>,
    pub r_com: Option<f64>,
    pub r_sub: Option<f64>,
    pub r_occ: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skip {
    pub index: usize,
    pub metric: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub rows: Vec<LayoutMetrics>,
    pub means: MetricMeans,
    pub skip_counts: BTreeMap<&'static str, usize>,
    pub skips: Vec<Skip>,
}

/// Computes every applicable metric for a batch. `references` and `ctxs`,
/// when given, must align index-wise with `batch`.
pub fn metric_report(
    batch: &[Layout],
    references: Option<&[Layout]>,
    ctxs: Option<&[SceneContext]>,
) -> Result<MetricReport> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(r) = references {
        if r.len() != batch.len() {
            return Err(Error::LengthMismatch {
                what: "references",
                expected: batch.len(),
                got: r.len(),
            });
        }
    }
    if let Some(c) = ctxs {
        if c.len() != batch.len() {
            return Err(Error::LengthMismatch {
                what: "scene contexts",
                expected: batch.len(),
                got: c.len(),
            });
        }
    }

    let mut skips = Vec::new();
    let mut rows = Vec::with_capacity(batch.len());
    for (i, layout) in batch.iter().enumerate() {
        let mut skip = |metric: &'static str, reason: &str| {
            skips.push(Skip {
                index: i,
                metric,
                reason: reason.to_string(),
            })
        };
        let max_iou = match references {
            Some(r) => Some(max_iou(layout, &r[i])),
            None => {
                skip("max_iou", "no reference layout");
                None
            }
        };
        let ctx = ctxs.map(|c| &c[i]);
        let (r_com_v, r_sub_v) = if !layout.task.background_constrained() {
            skip("r_com", "background-free task");
            skip("r_sub", "background-free task");
            (None, None)
        } else {
            let rc = match ctx {
                Some(c) if c.background.is_some() => Some(r_com(layout, c)?),
                _ => {
                    skip("r_com", "no background raster");
                    None
                }
            };
            let rs = match ctx {
                Some(c) if c.saliency.is_some() => Some(r_sub(layout, c)?),
                _ => {
                    skip("r_sub", "no saliency map");
                    None
                }
            };
            (rc, rs)
        };
        rows.push(LayoutMetrics {
            index: i,
            task: layout.task,
            ove: overlap(layout),
            ali: alignment(layout),
            max_iou,
            r_com: r_com_v,
            r_sub: r_sub_v,
            occupied: !layout.is_empty(),
        });
    }

    let means = MetricMeans {
        ove: mean(rows.iter().map(|r| Some(r.ove))).unwrap_or(0.0),
        ali: mean(rows.iter().map(|r| Some(r.ali))).unwrap_or(0.0),
        max_iou: mean(rows.iter().map(|r| r.max_iou)),
        r_com: mean(rows.iter().map(|r| r.r_com)),
        r_sub: mean(rows.iter().map(|r| r.r_sub)),
        r_occ: r_occ(batch)?,
    };
    let mut skip_counts = BTreeMap::new();
    for s in &skips {
        *skip_counts.entry(s.metric).or_insert(0) += 1;
    }
    Ok(MetricReport {
        rows,
        means,
        skip_counts,
        skips,
    })
}

/// Mean of the present values, accumulated in index order.
fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Comma-separated table, one row per layout plus a trailing `mean` row.
    /// Skipped metrics are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,task,ove,ali,max_iou,r_com,r_sub,occupied\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{},{},{},{}",
                r.index,
                r.task.as_str(),
                r.ove,
                r.ali,
                cell(r.max_iou),
                cell(r.r_com),
                cell(r.r_sub),
                u8::from(r.occupied)
            );
        }
        let m = &self.means;
        let _ = writeln!(
            out,
            "mean,,{:.6},{:.6},{},{},{},{:.6}",
            m.ove,
            m.ali,
            cell(m.max_iou),
            cell(m.r_com),
            cell(m.r_sub),
            m.r_occ
        );
        out
    }
}
