//! Corpus directories.
//!
//! A corpus directory holds one layout document per sample (`000000.json`,
//! ...) extended with `label` and `provenance`, binary PGM sidecars for
//! backgrounds and saliency maps, and an `index.json` listing every sample.
//! `manifest.json` and `stats.json` next to them are ignored.
//! A JSON-lines file with one sample document per line is also accepted.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{LabeledSample, Provenance};
use crate::error::{Error, Result};
use crate::io::{encode_pgm, write_atomic, LayoutDoc};
use crate::layout::TaskKind;
use crate::qualify::Label;

pub const INDEX_FILE: &str = "index.json";
/// Run manifest written next to a generated corpus; never a sample.
pub const MANIFEST_FILE: &str = "manifest.json";
/// Corpus statistics written by the generator; never a sample.
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Serialize, Deserialize)]
struct SampleDoc {
    #[serde(flatten)]
    doc: LayoutDoc,
    label: Label,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    file: String,
    task: TaskKind,
    label: Label,
    provenance: Provenance,
    elements: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Index {
    version: u32,
    samples: Vec<IndexEntry>,
}

/// Writes `samples` into `dir`, creating it if needed.
pub fn save_corpus(samples: &[LabeledSample], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = Index {
        version: 1,
        samples: Vec::with_capacity(samples.len()),
    };
    for (i, s) in samples.iter().enumerate() {
        let stem = format!("{i:06}");
        let mut doc = LayoutDoc::from_layout(&s.layout);
        if let Some(bg) = &s.ctx.background {
            let name = format!("{stem}.bg.pgm");
            write_atomic(&dir.join(&name), &encode_pgm(bg))?;
            doc.background_path = Some(name);
        }
        if let Some(sal) = &s.ctx.saliency {
            let name = format!("{stem}.sal.pgm");
            write_atomic(&dir.join(&name), &encode_pgm(&sal.to_gray()))?;
            doc.saliency_path = Some(name);
        }
        let file = format!("{stem}.json");
        let record = SampleDoc {
            doc,
            label: s.label,
            provenance: s.provenance,
        };
        let text = serde_json::to_string_pretty(&record).expect("sample serializes");
        write_atomic(&dir.join(&file), text.as_bytes())?;
        index.samples.push(IndexEntry {
            file,
            task: s.layout.task,
            label: s.label,
            provenance: s.provenance,
            elements: s.layout.len(),
        });
    }
    let text = serde_json::to_string_pretty(&index).expect("index serializes");
    write_atomic(&dir.join(INDEX_FILE), text.as_bytes())
}

fn record(text: &str, path: &Path, index: usize, base: &Path) -> Result<LabeledSample> {
    let malformed = |reason: String| Error::MalformedRecord {
        path: path.to_path_buf(),
        index,
        reason,
    };
    let rec: SampleDoc = serde_json::from_str(text)
        .map_err(|e| malformed(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let ctx = rec.doc.load_context(base)?;
    let sample = LabeledSample {
        layout: rec.doc.layout(),
        ctx,
        label: rec.label,
        provenance: rec.provenance,
    };
    if !sample.is_consistent() {
        return Err(malformed(format!(
            "label {} contradicts provenance {}",
            sample.label, sample.provenance
        )));
    }
    Ok(sample)
}

/// Layout files of a directory in lexicographic order, skipping the index,
/// manifest, statistics and dotfiles.
pub fn sample_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if path.is_file()
            && name.ends_with(".json")
            && !name.starts_with('.')
            && ![INDEX_FILE, MANIFEST_FILE, STATS_FILE].contains(&name.as_ref())
        {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads a corpus directory, or a JSON-lines file of sample documents.
pub fn load_corpus(path: &Path) -> Result<Vec<LabeledSample>> {
    if path.is_dir() {
        let mut out = Vec::new();
        for (i, file) in sample_files(path)?.iter().enumerate() {
            let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
            out.push(record(&text, file, i, path)?);
        }
        return Ok(out);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| record(line, path, i, base))
        .collect()
}
