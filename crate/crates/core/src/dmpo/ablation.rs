//! Margin-setting comparison from a shared starting policy.

use serde::{Deserialize, Serialize};

use super::loss::MarginKind;
use super::policy::ToyPolicy;
use super::train::{
    dmpo_train, evaluate_policy, stream_seed, PolicyEval, PromptContext, TrainConfig, TrainHistory,
};
use crate::error::{Error, Result};
use crate::layout::Layout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub settings: Vec<MarginKind>,
    pub seeds: Vec<u64>,
    /// Template for every run; `seed` and `margin` are overridden per run.
    pub train: TrainConfig,
    /// Samples per context for the final evaluation.
    pub eval_samples: usize,
}

impl AblationConfig {
    pub fn new(seeds: impl IntoIterator<Item = u64>, train: TrainConfig) -> Self {
        AblationConfig {
            settings: MarginKind::ABLATION.to_vec(),
            seeds: seeds.into_iter().collect(),
            train,
            eval_samples: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub eval: PolicyEval,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: String,
    pub margin: MarginKind,
    pub mean_score: f64,
    pub pass_rate: f64,
    pub runs: Vec<SeedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    /// The untrained starting policy, evaluated with each seed's stream.
    pub baseline: AblationRow,
    pub rows: Vec<AblationRow>,
}

const EVAL_STREAM: u64 = 0x4556_414c;

/// Seed of the evaluation stream paired with a training seed.
pub fn eval_seed(seed: u64) -> u64 {
    stream_seed(seed, &[EVAL_STREAM])
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn row(setting: String, margin: MarginKind, runs: Vec<SeedResult>) -> AblationRow {
    AblationRow {
        setting,
        margin,
        mean_score: mean(runs.iter().map(|r| r.eval.mean_score)),
        pass_rate: mean(runs.iter().map(|r| r.eval.pass_rate)),
        runs,
    }
}

/// Trains one copy of `policy` per setting and seed and evaluates each.
///
/// Evaluation samples depend only on the seed, so every setting is scored on
/// the same random stream.
pub fn ablation_harness<E>(
    policy: &ToyPolicy,
    evaluator: &E,
    contexts: &[PromptContext],
    cfg: &AblationConfig,
) -> Result<AblationTable>
where
    E: Fn(&PromptContext, &Layout) -> f64 + ?Sized,
{
    if cfg.seeds.is_empty() || cfg.settings.is_empty() {
        return Err(Error::Config(
            "ablation needs at least one seed and one setting".into(),
        ));
    }
    let t = &cfg.train;
    let evaluate = |p: &ToyPolicy, seed: u64| {
        evaluate_policy(
            p,
            evaluator,
            contexts,
            cfg.eval_samples,
            t.temperature,
            eval_seed(seed),
            t.pass_threshold,
        )
    };
    let mut base_runs = Vec::new();
    for &seed in &cfg.seeds {
        base_runs.push(SeedResult {
            seed,
            eval: evaluate(policy, seed)?,
            history: TrainHistory::default(),
        });
    }
    let baseline = row("pretrained".into(), MarginKind::Dpo, base_runs);

    let mut rows = Vec::new();
    for &margin in &cfg.settings {
        let mut runs = Vec::new();
        for &seed in &cfg.seeds {
            let run_cfg = TrainConfig {
                seed,
                margin,
                ..t.clone()
            };
            let (trained, history) = dmpo_train(policy, evaluator, contexts, &run_cfg)?;
            let eval = evaluate(&trained, seed)?;
            log::info!(
                "ablation {margin} seed {seed}: score {:.4} pass {:.4}",
                eval.mean_score,
                eval.pass_rate
            );
            runs.push(SeedResult {
                seed,
                eval,
                history,
            });
        }
        rows.push(row(margin.to_string(), margin, runs));
    }
    Ok(AblationTable { baseline, rows })
}

impl AblationTable {
    pub fn row(&self, margin: MarginKind) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.margin == margin)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("setting,mean_score,pass_rate,seeds\n");
        for r in std::iter::once(&self.baseline).chain(&self.rows) {
            s.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                r.setting,
                r.mean_score,
                r.pass_rate,
                r.runs.len()
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<12} {:>10} {:>10}\n", "setting", "score", "pass rate");
        for r in std::iter::once(&self.baseline).chain(&self.rows) {
            s.push_str(&format!(
                "{:<12} {:>10.4} {:>10.4}\n",
                r.setting, r.mean_score, r.pass_rate
            ));
        }
        s
    }
}
