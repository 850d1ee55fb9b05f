//! Command-line front end. Every command writes into a run directory that
//! receives a `manifest.json` with the effective configuration, so a run can
//! be repeated exactly.

mod commands;
mod config;

use std::ffi::OsString;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{EvalConfig, PretrainConfig, RunConfig, SchemeConfig};

use crate::dmpo::MarginKind;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::layout::TaskKind;

pub const EXIT_OK: i32 = 0;
/// Bad arguments, configuration or input data.
pub const EXIT_INPUT: i32 = 1;
/// Internal failure.
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "unilayout",
    version,
    about = "Layout evaluation, metrics, prompting and preference training"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run directory for outputs and the manifest.
    #[arg(long, short)]
    pub out: PathBuf,
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus.
    GenCorpus {
        #[command(flatten)]
        common: Common,
        /// Tasks to generate (repeatable); all four when omitted.
        #[arg(long = "task")]
        tasks: Vec<TaskKind>,
        /// Samples per task.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fraction of qualified samples.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        min_elements: Option<usize>,
        #[arg(long)]
        max_elements: Option<usize>,
    },
    /// Judge layouts against the rule set.
    Qualify {
        #[command(flatten)]
        common: Common,
        /// Layout files, layout directories, or labeled corpora.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Compute layout metrics for a batch.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Reference layouts, aligned with the inputs, for max IoU.
        #[arg(long = "reference")]
        references: Vec<PathBuf>,
    },
    /// Render layouts to images and geometry prompts.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write PNG instead of PPM.
        #[arg(long)]
        png: bool,
    },
    /// Build a prompt from a task specification, or parse model output.
    Prompt {
        #[command(flatten)]
        common: Common,
        /// Task specification (JSON).
        #[arg(long, required_unless_present = "parse", conflicts_with = "parse")]
        spec: Option<PathBuf>,
        /// Layout to append as the assistant completion.
        #[arg(long, requires = "spec")]
        completion: Option<PathBuf>,
        /// Model output to parse into a layout.
        #[arg(long)]
        parse: Option<PathBuf>,
        #[arg(long, requires = "parse")]
        task: Option<TaskKind>,
        /// Canvas as WxH.
        #[arg(long, requires = "parse", value_parser = parse_canvas)]
        canvas: Option<(u32, u32)>,
    },
    /// Pretrain the toy policy and align it with the rule evaluator.
    Train {
        #[command(flatten)]
        common: Common,
        /// Labeled corpus for pretraining; generated from the config when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Compare all six margin settings instead of a single run.
        #[arg(long)]
        ablation: bool,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// dpo, fixed:M or dmpo.
        #[arg(long, value_parser = parse_margin)]
        margin: Option<MarginKind>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        eval_samples: Option<usize>,
    },
}

fn parse_canvas(s: &str) -> std::result::Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width {w:?}"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height {h:?}"))?;
    if w == 0 || h == 0 {
        return Err("canvas must be non-empty".into());
    }
    Ok((w, h))
}

fn parse_margin(s: &str) -> std::result::Result<MarginKind, String> {
    MarginKind::parse(s)
        .ok_or_else(|| format!("unknown margin {s:?} (expected dpo, fixed:M or dmpo)"))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenCorpus { .. } => "gen-corpus",
            Command::Qualify { .. } => "qualify",
            Command::Metrics { .. } => "metrics",
            Command::Render { .. } => "render",
            Command::Prompt { .. } => "prompt",
            Command::Train { .. } => "train",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::GenCorpus { common, .. }
            | Command::Qualify { common, .. }
            | Command::Metrics { common, .. }
            | Command::Render { common, .. }
            | Command::Prompt { common, .. }
            | Command::Train { common, .. } => common,
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    args: &'a [String],
    seed: Option<u64>,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

/// Collects what a command produced for the manifest.
pub(crate) struct Run {
    pub out: PathBuf,
    pub cfg: RunConfig,
    pub seed: Option<u64>,
    outputs: Vec<String>,
}

impl Run {
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.out.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn record(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }
}

fn execute(cli: Cli, args: &[String]) -> Result<()> {
    let common = cli.command.common().clone();
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    let mut run = Run {
        out: common.out.clone(),
        cfg,
        seed: None,
        outputs: Vec::new(),
    };
    let name = cli.command.name();
    commands::dispatch(cli.command, &mut run)?;
    let manifest = Manifest {
        tool: "unilayout",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        args,
        seed: run.seed,
        config: &run.cfg,
        outputs: std::mem::take(&mut run.outputs),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(
        &run.out.join(crate::dataset::MANIFEST_FILE),
        text.as_bytes(),
    )
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match panic::catch_unwind(AssertUnwindSafe(|| execute(cli, &args))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_INTERNAL
            }
        }
        Err(_) => {
            eprintln!("error: internal failure");
            EXIT_INTERNAL
        }
    }
}

/// Log verbosity comes from `UNILAYOUT_LOG` (e.g. `info`, `debug`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("UNILAYOUT_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

pub(crate) fn display(p: &Path) -> String {
    p.display().to_string()
}
