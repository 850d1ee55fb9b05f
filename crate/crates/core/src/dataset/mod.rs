//! Labeled layout corpora: a synthetic generator, on-disk storage and
//! summary statistics.

mod generate;
mod store;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::layout::{Layout, SceneContext, TaskKind, DEFAULT_CANVAS_H, DEFAULT_CANVAS_W};
use crate::qualify::{Label, RuleConfig, RuleId};

pub use generate::injections_for;
pub use store::{load_corpus, sample_files, save_corpus, INDEX_FILE, MANIFEST_FILE, STATS_FILE};

/// Where a sample's label comes from: an untouched base, or the one rule
/// violation injected into it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Clean,
    Injected(RuleId),
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Clean => "clean",
            Provenance::Injected(r) => r.as_str(),
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        if s == "clean" {
            Some(Provenance::Clean)
        } else {
            RuleId::parse(s).map(Provenance::Injected)
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Provenance::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown provenance {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub layout: Layout,
    pub ctx: SceneContext,
    pub label: Label,
    pub provenance: Provenance,
}

impl LabeledSample {
    /// Clean samples are exactly the qualified ones.
    pub fn is_consistent(&self) -> bool {
        (self.provenance == Provenance::Clean) == (self.label == Label::Qualified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    /// Samples per task, in `TaskKind::ALL` order.
    pub counts: [usize; 4],
    /// Fraction of qualified samples per task.
    pub positive_ratio: f64,
    pub seed: u64,
    pub min_elements: usize,
    pub max_elements: usize,
    pub canvas_w: u32,
    pub canvas_h: u32,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            counts: [0; 4],
            positive_ratio: 0.5,
            seed: 0,
            min_elements: 2,
            max_elements: 8,
            canvas_w: DEFAULT_CANVAS_W,
            canvas_h: DEFAULT_CANVAS_H,
        }
    }
}

impl CorpusSpec {
    pub fn new(seed: u64) -> Self {
        CorpusSpec {
            seed,
            ..CorpusSpec::default()
        }
    }

    pub fn with_count(mut self, task: TaskKind, n: usize) -> Self {
        self.counts[task.index()] = n;
        self
    }

    pub fn count(&self, task: TaskKind) -> usize {
        self.counts[task.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.positive_ratio > 0.0 && self.positive_ratio < 1.0) {
            return bad("positive_ratio must lie strictly between 0 and 1");
        }
        if self.min_elements < 2 || self.max_elements < self.min_elements {
            return bad("element range must satisfy 2 <= min_elements <= max_elements");
        }
        if self.max_elements > 8 {
            return bad("synthetic templates hold at most 8 elements");
        }
        if self.canvas_w < 300 || self.canvas_h < 400 {
            return bad("synthetic templates need a canvas of at least 300x400");
        }
        Ok(())
    }
}

/// Lazily generated corpus, in task order then index order. Memory stays
/// bounded by one sample, which matters for raster-carrying tasks.
pub fn corpus_iter(
    spec: &CorpusSpec,
    rule_cfg: &RuleConfig,
) -> Result<impl Iterator<Item = LabeledSample>> {
    spec.validate()?;
    let spec = spec.clone();
    let cfg = *rule_cfg;
    Ok(TaskKind::ALL.into_iter().flat_map(move |task| {
        let labels = generate::labels(&spec, task, spec.count(task));
        let spec = spec.clone();
        labels
            .into_iter()
            .enumerate()
            .map(move |(i, label)| generate::sample(&spec, &cfg, task, i, label))
    }))
}

pub fn generate_corpus(spec: &CorpusSpec, rule_cfg: &RuleConfig) -> Result<Vec<LabeledSample>> {
    Ok(corpus_iter(spec, rule_cfg)?.collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub per_task: BTreeMap<String, usize>,
    pub per_label: BTreeMap<String, usize>,
    pub per_provenance: BTreeMap<String, usize>,
    /// Element count to number of samples.
    pub element_histogram: BTreeMap<usize, usize>,
}

pub fn corpus_stats(samples: &[LabeledSample]) -> CorpusStats {
    let mut per_task: BTreeMap<String, usize> = TaskKind::ALL
        .iter()
        .map(|t| (t.as_str().to_string(), 0))
        .collect();
    let mut per_label: BTreeMap<String, usize> = [Label::Qualified, Label::Unqualified]
        .iter()
        .map(|l| (l.as_str().to_string(), 0))
        .collect();
    let mut per_provenance: BTreeMap<String, usize> = std::iter::once(Provenance::Clean)
        .chain(RuleId::ALL.into_iter().map(Provenance::Injected))
        .map(|p| (p.as_str().to_string(), 0))
        .collect();
    let mut element_histogram = BTreeMap::new();
    for s in samples {
        *per_task
            .entry(s.layout.task.as_str().to_string())
            .or_default() += 1;
        *per_label.entry(s.label.as_str().to_string()).or_default() += 1;
        *per_provenance
            .entry(s.provenance.as_str().to_string())
            .or_default() += 1;
        *element_histogram.entry(s.layout.len()).or_default() += 1;
    }
    CorpusStats {
        total: samples.len(),
        per_task,
        per_label,
        per_provenance,
        element_histogram,
    }
}

impl CorpusStats {
    pub fn to_text(&self) -> String {
        let mut s = format!("samples: {}\n", self.total);
        let mut section = |title: &str, m: &BTreeMap<String, usize>| {
            s.push_str(title);
            s.push('\n');
            for (k, v) in m {
                s.push_str(&format!("  {k}: {v}\n"));
            }
        };
        section("tasks:", &self.per_task);
        section("labels:", &self.per_label);
        section("provenance:", &self.per_provenance);
        s.push_str("elements:\n");
        for (k, v) in &self.element_histogram {
            s.push_str(&format!("  {k}: {v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_ratio() {
        let spec = CorpusSpec::new(7).with_count(TaskKind::Bfef, 10);
        let c = generate_corpus(&spec, &RuleConfig::default()).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c.iter().filter(|s| s.label == Label::Qualified).count(), 5);
        assert!(c.iter().all(LabeledSample::is_consistent));
    }

    #[test]
    fn empty_stats() {
        let s = corpus_stats(&[]);
        assert_eq!(s.total, 0);
        assert!(s
            .per_task
            .values()
            .chain(s.per_label.values())
            .chain(s.per_provenance.values())
            .all(|&v| v == 0));
        assert!(s.element_histogram.is_empty());
    }

    #[test]
    fn provenance_names() {
        for p in std::iter::once(Provenance::Clean)
            .chain(RuleId::ALL.into_iter().map(Provenance::Injected))
        {
            assert_eq!(Provenance::parse(p.as_str()), Some(p));
        }
        assert_eq!(Provenance::parse("nope"), None);
    }

    #[test]
    fn spec_validation() {
        assert!(CorpusSpec {
            positive_ratio: 1.0,
            ..CorpusSpec::default()
        }
        .validate()
        .is_err());
        assert!(CorpusSpec {
            min_elements: 1,
            ..CorpusSpec::default()
        }
        .validate()
        .is_err());
        assert!(CorpusSpec::default().validate().is_ok());
    }
}
