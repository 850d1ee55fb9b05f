use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{display, Command, Run};
use crate::dataset::{self, corpus_stats, CorpusSpec, INDEX_FILE, STATS_FILE};
use crate::dmpo::{
    ablation_harness, checkpoint, dmpo_train, eval_seed, evaluate_policy, nll_pretrain,
    rule_evaluator, AblationConfig, MarginKind, PolicyEval, ToyPolicy, TrainingData, NUM_CONTEXTS,
};
use crate::error::{Error, Result};
use crate::io::{encode_png_rgb, encode_ppm, load_gray, parse_layout_json, LayoutDoc};
use crate::layout::{Layout, SceneContext, TaskKind, DEFAULT_CANVAS_H, DEFAULT_CANVAS_W};
use crate::metrics::metric_report;
use crate::prompt::{build_instruction, build_prompt, parse_layout, TaskSpec};
use crate::qualify::{self, Label};
use crate::render::{dual_branch, ColorMap};

pub(super) fn dispatch(cmd: Command, run: &mut Run) -> Result<()> {
    match cmd {
        Command::GenCorpus {
            tasks,
            n,
            seed,
            ratio,
            min_elements,
            max_elements,
            ..
        } => {
            let spec = &mut run.cfg.corpus;
            if let Some(n) = n {
                let tasks = if tasks.is_empty() {
                    TaskKind::ALL.to_vec()
                } else {
                    tasks.clone()
                };
                spec.counts = [0; 4];
                for t in tasks {
                    spec.counts[t.index()] = n;
                }
            } else if !tasks.is_empty() {
                let kept = spec.counts;
                spec.counts = [0; 4];
                for t in tasks {
                    spec.counts[t.index()] = kept[t.index()];
                }
            }
            set(&mut spec.seed, seed);
            set(&mut spec.positive_ratio, ratio);
            set(&mut spec.min_elements, min_elements);
            set(&mut spec.max_elements, max_elements);
            gen_corpus(run)
        }
        Command::Qualify {
            inputs, threshold, ..
        } => {
            set(&mut run.cfg.rules.threshold, threshold);
            run.cfg.rules.validate()?;
            qualify_cmd(run, &inputs)
        }
        Command::Metrics {
            inputs, references, ..
        } => metrics_cmd(run, &inputs, &references),
        Command::Render { inputs, png, .. } => render_cmd(run, &inputs, png),
        Command::Prompt {
            spec,
            completion,
            parse,
            task,
            canvas,
            ..
        } => match (spec, parse) {
            (Some(spec), None) => prompt_cmd(run, &spec, completion.as_deref()),
            (None, Some(text)) => {
                let task = task.ok_or_else(|| Error::Config("--parse needs --task".into()))?;
                let (w, h) = canvas.unwrap_or((DEFAULT_CANVAS_W, DEFAULT_CANVAS_H));
                parse_cmd(run, &text, task, w, h)
            }
            _ => Err(Error::Config(
                "give exactly one of --spec and --parse".into(),
            )),
        },
        Command::Train {
            corpus,
            ablation,
            seeds,
            seed,
            steps,
            lr,
            beta,
            margin,
            epochs,
            eval_samples,
            ..
        } => {
            let cfg = &mut run.cfg;
            set(&mut cfg.eval.ablation_seeds, seeds);
            set(&mut cfg.train.seed, seed);
            set(&mut cfg.train.steps, steps);
            set(&mut cfg.train.lr, lr);
            set(&mut cfg.train.beta, beta);
            set(&mut cfg.train.margin, margin);
            set(&mut cfg.pretrain.epochs, epochs);
            set(&mut cfg.eval.samples, eval_samples);
            train_cmd(run, corpus.as_deref(), ablation)
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn gen_corpus(run: &mut Run) -> Result<()> {
    let spec = run.cfg.corpus.clone();
    if spec.total() == 0 {
        return Err(Error::Config(
            "corpus has no samples; pass --n or set corpus.counts".into(),
        ));
    }
    run.seed = Some(spec.seed);
    let samples = dataset::generate_corpus(&spec, &run.cfg.rules)?;
    dataset::save_corpus(&samples, &run.out)?;
    for (i, s) in samples.iter().enumerate() {
        run.record(format!("{i:06}.json"));
        if s.ctx.background.is_some() {
            run.record(format!("{i:06}.bg.pgm"));
        }
        if s.ctx.saliency.is_some() {
            run.record(format!("{i:06}.sal.pgm"));
        }
    }
    run.record(INDEX_FILE);
    let stats = corpus_stats(&samples);
    run.write(
        STATS_FILE,
        serde_json::to_string_pretty(&stats)
            .expect("stats serialize")
            .as_bytes(),
    )?;
    print!("{}", stats.to_text());
    Ok(())
}

/// One layout read from disk, with its label when the file carries one.
struct Item {
    name: String,
    layout: Layout,
    ctx: SceneContext,
    label: Option<Label>,
}

#[derive(Deserialize)]
struct LabelField {
    label: Option<Label>,
}

fn read_item(path: &Path) -> Result<Item> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let json_err = |source| Error::Json {
        path: path.to_path_buf(),
        source,
    };
    let doc: LayoutDoc = parse_layout_json(&text).map_err(json_err)?;
    let label: LabelField = serde_json::from_str(&text).map_err(json_err)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(Item {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        ctx: doc.load_context(base)?,
        layout: doc.layout(),
        label: label.label,
    })
}

/// Expands files, directories of layout files, and JSON-lines corpora.
fn read_inputs(paths: &[PathBuf]) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for p in paths {
        if p.is_dir() {
            for f in dataset::sample_files(p)? {
                items.push(read_item(&f)?);
            }
        } else if p.extension().is_some_and(|e| e == "jsonl") {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            for (i, s) in dataset::load_corpus(p)?.into_iter().enumerate() {
                items.push(Item {
                    name: format!("{stem}-{i:06}"),
                    layout: s.layout,
                    ctx: s.ctx,
                    label: Some(s.label),
                });
            }
        } else {
            items.push(read_item(p)?);
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(items)
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    input: &'a str,
    expected: Option<Label>,
    label: Label,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<qualify::Verdict>,
}

#[derive(Serialize)]
struct QualifySummary {
    samples: usize,
    qualified: usize,
    invalid: usize,
    labeled: usize,
    accuracy: Option<f64>,
}

fn qualify_cmd(run: &mut Run, inputs: &[PathBuf]) -> Result<()> {
    let items = read_inputs(inputs)?;
    let cfg = run.cfg.rules;
    let mut lines = String::new();
    let mut reports = String::new();
    let (mut predicted, mut truth) = (Vec::new(), Vec::new());
    let (mut qualified, mut invalid) = (0, 0);
    for it in &items {
        let line = match qualify::qualify(&it.layout, &it.ctx, &cfg) {
            Ok(v) => {
                let _ = writeln!(reports, "== {} ==\n{}", it.name, v.report.to_text());
                VerdictLine {
                    input: &it.name,
                    expected: it.label,
                    label: v.label,
                    score: v.score,
                    error: None,
                    verdict: Some(v),
                }
            }
            Err(Error::InvalidLayout(faults)) => {
                invalid += 1;
                VerdictLine {
                    input: &it.name,
                    expected: it.label,
                    label: Label::Unqualified,
                    score: 0.0,
                    error: Some(Error::InvalidLayout(faults).to_string()),
                    verdict: None,
                }
            }
            Err(e) => return Err(e),
        };
        if line.label == Label::Qualified {
            qualified += 1;
        }
        if let Some(t) = it.label {
            predicted.push(line.label);
            truth.push(t);
        }
        lines.push_str(&serde_json::to_string(&line).expect("verdict serializes"));
        lines.push('\n');
    }
    let accuracy = if truth.is_empty() {
        None
    } else {
        Some(qualify::accuracy(&predicted, &truth)?)
    };
    let summary = QualifySummary {
        samples: items.len(),
        qualified,
        invalid,
        labeled: truth.len(),
        accuracy,
    };
    run.write("verdicts.jsonl", lines.as_bytes())?;
    run.write("reports.txt", reports.as_bytes())?;
    run.write(
        "summary.json",
        serde_json::to_string_pretty(&summary)
            .expect("summary serializes")
            .as_bytes(),
    )?;
    println!(
        "samples: {}  qualified: {}  invalid: {}",
        summary.samples, qualified, invalid
    );
    if let Some(a) = accuracy {
        println!("accuracy: {a:.4} over {} labeled samples", truth.len());
    }
    Ok(())
}

fn metrics_cmd(run: &mut Run, inputs: &[PathBuf], references: &[PathBuf]) -> Result<()> {
    let items = read_inputs(inputs)?;
    let refs = if references.is_empty() {
        None
    } else {
        Some(read_inputs(references)?)
    };
    let layouts: Vec<Layout> = items.iter().map(|i| i.layout.clone()).collect();
    let ctxs: Vec<SceneContext> = items.iter().map(|i| i.ctx.clone()).collect();
    let ref_layouts: Option<Vec<Layout>> = refs.map(|r| r.into_iter().map(|i| i.layout).collect());
    let report = metric_report(&layouts, ref_layouts.as_deref(), Some(&ctxs))?;
    let csv = report.to_csv();
    run.write("metrics.csv", csv.as_bytes())?;
    run.write("metrics.json", report.to_json().as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn render_cmd(run: &mut Run, inputs: &[PathBuf], png: bool) -> Result<()> {
    let items = read_inputs(inputs)?;
    let cmap = ColorMap::default();
    for it in &items {
        let (text, img) = dual_branch(&it.layout, &it.ctx, &cmap)?;
        if png {
            run.write(&format!("{}.png", it.name), &encode_png_rgb(&img)?)?;
        } else {
            run.write(&format!("{}.ppm", it.name), &encode_ppm(&img))?;
        }
        run.write(&format!("{}.txt", it.name), text.as_bytes())?;
    }
    println!(
        "rendered {} layouts into {}",
        items.len(),
        display(&run.out)
    );
    Ok(())
}

fn prompt_cmd(run: &mut Run, spec_path: &Path, completion: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
    let spec: TaskSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidTaskSpec(format!("{}: {e}", display(spec_path))))?;
    let instruction = build_instruction(&spec)?;
    let mut ctx = SceneContext::empty();
    if let Some(bg) = &spec.background {
        let base = spec_path.parent().unwrap_or_else(|| Path::new("."));
        ctx.background = Some(load_gray(&base.join(bg))?);
    }
    let layout = match completion {
        Some(p) => Some(crate::io::load_layout_file(p)?.0),
        None => None,
    };
    let prompt = build_prompt(spec.task, &ctx, &instruction, layout.as_ref())?;
    run.write("prompt.txt", prompt.as_bytes())?;
    println!("{prompt}");
    Ok(())
}

fn parse_cmd(run: &mut Run, path: &Path, task: TaskKind, w: u32, h: u32) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = parse_layout(&text, w, h, task)?;
    let doc = LayoutDoc::from_layout(&parsed.layout);
    run.write(
        "layout.json",
        serde_json::to_string_pretty(&doc)
            .expect("layout serializes")
            .as_bytes(),
    )?;
    run.write(
        "warnings.json",
        serde_json::to_string_pretty(&parsed.warnings)
            .expect("warnings serialize")
            .as_bytes(),
    )?;
    println!(
        "parsed {} elements, {} warnings",
        parsed.layout.len(),
        parsed.warnings.len()
    );
    for w in &parsed.warnings {
        println!("  line {}: {}", w.line, w.message);
    }
    Ok(())
}

/// Corpus used when `train` gets neither a corpus directory nor configured
/// counts: short layouts keep the toy policy's task tractable.
fn default_training_corpus(seed: u64) -> CorpusSpec {
    let mut spec = TaskKind::ALL
        .into_iter()
        .fold(CorpusSpec::new(seed), |s, t| s.with_count(t, 100));
    spec.max_elements = 3;
    spec
}

#[derive(Serialize)]
struct TrainReport {
    margin: MarginKind,
    sequences: usize,
    skipped: usize,
    contexts: usize,
    nll_before: f64,
    nll_after: f64,
    pretrained: PolicyEval,
    aligned: PolicyEval,
}

fn train_cmd(run: &mut Run, corpus: Option<&Path>, ablation: bool) -> Result<()> {
    run.cfg.train.validate()?;
    let scheme = run.cfg.scheme.scheme();
    let mut data = TrainingData::default();
    match corpus {
        Some(dir) => {
            for s in dataset::load_corpus(dir)? {
                data.add(&scheme, &s.layout, &s.ctx);
            }
        }
        None => {
            if run.cfg.corpus.total() == 0 {
                run.cfg.corpus = default_training_corpus(run.cfg.train.seed);
            }
            for s in dataset::corpus_iter(&run.cfg.corpus, &run.cfg.rules)? {
                data.add(&scheme, &s.layout, &s.ctx);
            }
        }
    }
    if data.skipped > 0 {
        log::warn!(
            "skipped {} layouts the token scheme cannot express",
            data.skipped
        );
    }
    if data.sequences.is_empty() {
        return Err(Error::EmptyBatch);
    }
    run.seed = Some(run.cfg.train.seed);
    let pre_cfg = run.cfg.pretrain;
    let (pretrained, nll) = nll_pretrain(
        &ToyPolicy::new(scheme, NUM_CONTEXTS),
        &data.sequences,
        pre_cfg.epochs,
        pre_cfg.lr,
    )?;
    log::info!("pretraining nll {:.4} -> {:.4}", nll[0], nll[nll.len() - 1]);
    run.write("pretrained.ultp", &checkpoint::to_bytes(&pretrained))?;
    let mut csv = String::from("epoch,nll\n");
    for (i, v) in nll.iter().enumerate() {
        let _ = writeln!(csv, "{i},{v:.9}");
    }
    run.write("pretrain_history.csv", csv.as_bytes())?;

    let evaluator = rule_evaluator(run.cfg.rules);
    let train = run.cfg.train.clone();
    let samples = run.cfg.eval.samples;
    if ablation {
        let n = run.cfg.eval.ablation_seeds;
        let mut acfg = AblationConfig::new(0..n as u64, train);
        acfg.eval_samples = samples;
        let table = ablation_harness(&pretrained, &evaluator, &data.contexts, &acfg)?;
        run.write("ablation.csv", table.to_csv().as_bytes())?;
        run.write("ablation.txt", table.to_text().as_bytes())?;
        run.write(
            "ablation.json",
            serde_json::to_string_pretty(&table)
                .expect("table serializes")
                .as_bytes(),
        )?;
        print!("{}", table.to_text());
        return Ok(());
    }

    let (aligned, history) = dmpo_train(&pretrained, &evaluator, &data.contexts, &train)?;
    run.write("aligned.ultp", &checkpoint::to_bytes(&aligned))?;
    run.write("train_history.csv", history.to_csv().as_bytes())?;
    let es = eval_seed(train.seed);
    let eval = |p: &ToyPolicy| {
        evaluate_policy(
            p,
            &evaluator,
            &data.contexts,
            samples,
            train.temperature,
            es,
            train.pass_threshold,
        )
    };
    let report = TrainReport {
        margin: train.margin,
        sequences: data.sequences.len(),
        skipped: data.skipped,
        contexts: data.contexts.len(),
        nll_before: nll[0],
        nll_after: nll[nll.len() - 1],
        pretrained: eval(&pretrained)?,
        aligned: eval(&aligned)?,
    };
    let text = format!(
        "margin: {}\npretrained: score {:.4} pass {:.4}\naligned:    score {:.4} pass {:.4}\n",
        report.margin,
        report.pretrained.mean_score,
        report.pretrained.pass_rate,
        report.aligned.mean_score,
        report.aligned.pass_rate
    );
    run.write(
        "report.json",
        serde_json::to_string_pretty(&report)
            .expect("report serializes")
            .as_bytes(),
    )?;
    run.write("report.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}
