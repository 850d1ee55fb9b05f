//! Online preference alignment against an evaluator callback.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{margin, preference_loss_into, MarginKind, PreferencePair};
use super::policy::{context_id, ToyPolicy};
use super::tokens::{Token, TokenScheme};
use crate::error::{Error, Result};
use crate::layout::{Layout, SceneContext, TaskKind};
use crate::qualify::{self, RuleConfig};

/// One conditioning situation: the policy row it selects plus the canvas and
/// scene the evaluator needs.
#[derive(Debug, Clone)]
pub struct PromptContext {
    pub context: usize,
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub task: TaskKind,
    pub scene: SceneContext,
}

impl PromptContext {
    pub fn new(task: TaskKind, canvas_w: u32, canvas_h: u32, scene: SceneContext) -> Self {
        PromptContext {
            context: context_id(task, &scene),
            canvas_w,
            canvas_h,
            task,
            scene,
        }
    }
}

/// The rule engine's confidence score as a training evaluator.
pub fn rule_evaluator(cfg: RuleConfig) -> impl Fn(&PromptContext, &Layout) -> f64 {
    move |pc, layout| qualify::score(layout, &pc.scene, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub beta: f64,
    /// Step size on the logits. The loss gradient carries a factor of
    /// `beta`, so useful rates are large.
    pub lr: f64,
    pub steps: usize,
    pub temperature: f64,
    pub seed: u64,
    pub margin: MarginKind,
    /// Candidate pairs drawn per context per step.
    pub pairs_per_context: usize,
    /// Probe the pass rate every this many steps (0 disables probes).
    pub probe_every: usize,
    pub probe_samples: usize,
    pub pass_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            beta: 0.1,
            lr: 10.0,
            steps: 200,
            temperature: 1.0,
            seed: 0,
            margin: MarginKind::Dynamic,
            pairs_per_context: 8,
            probe_every: 50,
            probe_samples: 64,
            pass_threshold: qualify::DEFAULT_THRESHOLD,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.pairs_per_context == 0 {
            return bad("pairs_per_context must be at least 1".into());
        }
        if let MarginKind::Fixed(m) = self.margin {
            if !m.is_finite() {
                return bad("fixed margin must be finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: usize,
    pub loss: f64,
    pub mean_delta: f64,
    pub pairs: usize,
    pub skips: usize,
    pub pass_rate: Option<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<TrainRecord>,
    /// `(step, pass rate)` probes, including one before the first step and
    /// one after the last.
    pub probes: Vec<(usize, f64)>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,loss,mean_delta,skips,pass_rate,beta\n");
        for r in &self.records {
            let pr = r.pass_rate.map(|p| format!("{p:.6}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{:.9},{:.6},{},{},{}\n",
                r.step, r.loss, r.mean_delta, r.skips, pr, r.beta
            ));
        }
        s
    }
}

/// Pretraining sequences and one prompt context per policy row, gathered
/// from labeled layouts. Layouts the token scheme cannot express are skipped.
#[derive(Debug, Clone, Default)]
pub struct TrainingData {
    pub sequences: Vec<(usize, Vec<Token>)>,
    /// Sorted by policy row; the first layout seen for a row supplies it.
    pub contexts: Vec<PromptContext>,
    pub skipped: usize,
}

impl TrainingData {
    pub fn add(&mut self, scheme: &TokenScheme, layout: &Layout, scene: &SceneContext) {
        let Ok(tokens) = scheme.tokenize(layout) else {
            self.skipped += 1;
            return;
        };
        let c = context_id(layout.task, scene);
        self.sequences.push((c, tokens));
        if let Err(pos) = self.contexts.binary_search_by_key(&c, |pc| pc.context) {
            self.contexts.insert(
                pos,
                PromptContext::new(layout.task, layout.canvas_w, layout.canvas_h, scene.clone()),
            );
        }
    }
}

/// SplitMix64 over a seed and a tuple of stream coordinates.
pub(crate) fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x ^= p
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(x << 6)
            .wrapping_add(x >> 2);
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

const PROBE_STREAM: u64 = 0x50_524f_4245;

/// Detokenizes and scores a sample; malformed streams score 0.
fn score_tokens<E>(
    policy: &ToyPolicy,
    pc: &PromptContext,
    tokens: &[Token],
    evaluator: &E,
) -> Result<f64>
where
    E: Fn(&PromptContext, &Layout) -> f64 + ?Sized,
{
    let s = match policy
        .scheme()
        .detokenize(tokens, pc.canvas_w, pc.canvas_h, pc.task)
    {
        Ok(layout) => evaluator(pc, &layout),
        Err(_) => 0.0,
    };
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ScoreOutOfRange(s));
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEval {
    pub mean_score: f64,
    pub pass_rate: f64,
    pub samples: usize,
}

/// Samples `samples` layouts per context and scores them.
pub fn evaluate_policy<E>(
    policy: &ToyPolicy,
    evaluator: &E,
    contexts: &[PromptContext],
    samples: usize,
    temperature: f64,
    seed: u64,
    pass_threshold: f64,
) -> Result<PolicyEval>
where
    E: Fn(&PromptContext, &Layout) -> f64 + ?Sized,
{
    let mut total = 0.0;
    let mut passed = 0usize;
    let mut n = 0usize;
    for (ci, pc) in contexts.iter().enumerate() {
        for k in 0..samples {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &[ci as u64, k as u64]));
            let tokens = policy.sample_with(pc.context, temperature, &mut rng);
            let s = score_tokens(policy, pc, &tokens, evaluator)?;
            total += s;
            if s >= pass_threshold {
                passed += 1;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(PolicyEval {
        mean_score: total / n as f64,
        pass_rate: passed as f64 / n as f64,
        samples: n,
    })
}

/// Aligns a copy of `policy`, using the input itself as the frozen reference.
///
/// Each step draws `pairs_per_context` candidate pairs for every context,
/// skips ties, and applies the mean preference-loss gradient. Training fails
/// with [`Error::DegenerateFeedback`] when a whole step yields no usable pair
/// and no pair has been usable before, i.e. the evaluator gives no signal.
pub fn dmpo_train<E>(
    policy: &ToyPolicy,
    evaluator: &E,
    contexts: &[PromptContext],
    cfg: &TrainConfig,
) -> Result<(ToyPolicy, TrainHistory)>
where
    E: Fn(&PromptContext, &Layout) -> f64 + ?Sized,
{
    cfg.validate()?;
    if contexts.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(pc) = contexts.iter().find(|pc| pc.context >= policy.contexts()) {
        return Err(Error::PolicyMismatch(format!(
            "prompt context {} out of range (policy has {})",
            pc.context,
            policy.contexts()
        )));
    }
    let reference = policy;
    let mut current = policy.clone();
    let mut history = TrainHistory::default();
    let mut grad = vec![0.0; current.params().len()];
    let mut ever_used = false;

    let probe = |p: &ToyPolicy, step: usize| -> Result<f64> {
        let seed = stream_seed(cfg.seed, &[PROBE_STREAM, step as u64]);
        Ok(evaluate_policy(
            p,
            evaluator,
            contexts,
            cfg.probe_samples,
            cfg.temperature,
            seed,
            cfg.pass_threshold,
        )?
        .pass_rate)
    };
    let probing = cfg.probe_every > 0 && cfg.probe_samples > 0;
    if probing {
        history.probes.push((0, probe(&current, 0)?));
    }

    for step in 0..cfg.steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut pairs = Vec::new();
        let mut skips = 0usize;
        for (ci, pc) in contexts.iter().enumerate() {
            for k in 0..cfg.pairs_per_context {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
                    cfg.seed,
                    &[step as u64, ci as u64, k as u64],
                ));
                let a = current.sample_with(pc.context, cfg.temperature, &mut rng);
                let b = current.sample_with(pc.context, cfg.temperature, &mut rng);
                let sa = score_tokens(&current, pc, &a, evaluator)?;
                let sb = score_tokens(&current, pc, &b, evaluator)?;
                match PreferencePair::from_candidates(pc.context, (a, sa), (b, sb))? {
                    Some(p) => pairs.push(p),
                    None => skips += 1,
                }
            }
        }
        if pairs.is_empty() && !ever_used {
            return Err(Error::DegenerateFeedback { step, skips });
        }
        let mut loss = 0.0;
        let mut delta = 0.0;
        if !pairs.is_empty() {
            ever_used = true;
            let scale = 1.0 / pairs.len() as f64;
            for p in &pairs {
                debug_assert!(margin(p.winner_score, p.loser_score)?.is_some());
                loss += preference_loss_into(
                    cfg.margin, &current, reference, p, cfg.beta, scale, &mut grad,
                )?;
                delta += p.delta();
            }
            loss *= scale;
            delta *= scale;
            current.descend(&grad, cfg.lr);
        }
        let done = step + 1;
        let pass_rate = if probing && (done % cfg.probe_every == 0 || done == cfg.steps) {
            let pr = probe(&current, done)?;
            history.probes.push((done, pr));
            Some(pr)
        } else {
            None
        };
        history.records.push(TrainRecord {
            step: done,
            loss,
            mean_delta: delta,
            pairs: pairs.len(),
            skips,
            pass_rate,
            beta: cfg.beta,
        });
    }
    Ok((current, history))
}
