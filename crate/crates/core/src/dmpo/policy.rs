//! Tabular-softmax autoregressive generator.
//!
//! Each (context, position) pair owns one logit row over the whole
//! vocabulary. The model is deliberately tiny so every gradient is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tokens::{Token, TokenScheme, BOS, EOS};
use crate::error::{Error, Result};
use crate::layout::{SceneContext, TaskKind};

/// Coarse background-brightness buckets per task kind.
pub const BRIGHTNESS_BUCKETS: usize = 3;
/// Task kinds times brightness buckets.
pub const NUM_CONTEXTS: usize = 4 * BRIGHTNESS_BUCKETS;

/// Maps a task and scene to a context row. Scenes without a background
/// always land in the first bucket.
pub fn context_id(task: TaskKind, scene: &SceneContext) -> usize {
    let bucket = match scene.mean_brightness() {
        None => 0,
        Some(b) => ((b / 256.0 * BRIGHTNESS_BUCKETS as f64) as usize).min(BRIGHTNESS_BUCKETS - 1),
    };
    task.index() * BRIGHTNESS_BUCKETS + bucket
}

/// Numerically stable softmax of `row / temperature`.
pub fn softmax(row: &[f64], temperature: f64) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = row
        .iter()
        .map(|&z| ((z - max) / temperature).exp())
        .collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

fn log_softmax_at(row: &[f64], idx: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    row[idx] - lse
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    scheme: TokenScheme,
    contexts: usize,
    logits: Vec<f64>,
}

impl ToyPolicy {
    /// All-zero logits, i.e. uniform rows.
    pub fn new(scheme: TokenScheme, contexts: usize) -> Self {
        let len = contexts * (scheme.max_len() - 1) * scheme.vocab_size();
        ToyPolicy {
            scheme,
            contexts,
            logits: vec![0.0; len],
        }
    }

    pub fn from_params(scheme: TokenScheme, contexts: usize, logits: Vec<f64>) -> Result<Self> {
        let p = ToyPolicy::new(scheme, contexts);
        if logits.len() != p.logits.len() {
            return Err(Error::Checkpoint(format!(
                "table has {} entries, scheme needs {}",
                logits.len(),
                p.logits.len()
            )));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite logit".into()));
        }
        Ok(ToyPolicy { logits, ..p })
    }

    pub fn scheme(&self) -> &TokenScheme {
        &self.scheme
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    /// Number of predicted positions (everything after BOS).
    pub fn positions(&self) -> usize {
        self.scheme.max_len() - 1
    }

    pub fn vocab(&self) -> usize {
        self.scheme.vocab_size()
    }

    pub fn params(&self) -> &[f64] {
        &self.logits
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn same_shape(&self, other: &ToyPolicy) -> bool {
        self.scheme == other.scheme && self.contexts == other.contexts
    }

    pub(crate) fn ensure_same_shape(&self, other: &ToyPolicy) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::PolicyMismatch(
                "policy and reference have different shapes".into(),
            ))
        }
    }

    /// Offset of the row predicting token `t` (t >= 1).
    fn offset(&self, c: usize, t: usize) -> usize {
        (c * self.positions() + (t - 1)) * self.vocab()
    }

    pub fn row(&self, c: usize, t: usize) -> &[f64] {
        let o = self.offset(c, t);
        &self.logits[o..o + self.vocab()]
    }

    pub fn row_mut(&mut self, c: usize, t: usize) -> &mut [f64] {
        let o = self.offset(c, t);
        let v = self.vocab();
        &mut self.logits[o..o + v]
    }

    pub fn probs(&self, c: usize, t: usize) -> Vec<f64> {
        softmax(self.row(c, t), 1.0)
    }

    fn check(&self, c: usize, tokens: &[Token]) -> Result<()> {
        if c >= self.contexts {
            return Err(Error::PolicyMismatch(format!(
                "context {c} out of range (policy has {})",
                self.contexts
            )));
        }
        if tokens.len() > self.scheme.max_len() {
            return Err(Error::SequenceTooLong {
                len: tokens.len(),
                max: self.scheme.max_len(),
            });
        }
        if tokens.first() != Some(&BOS) {
            return Err(Error::MalformedTokens {
                position: 0,
                reason: "stream must start with BOS".into(),
            });
        }
        if let Some(i) = tokens.iter().position(|&t| usize::from(t) >= self.vocab()) {
            return Err(Error::MalformedTokens {
                position: i,
                reason: "token outside the vocabulary".into(),
            });
        }
        Ok(())
    }

    /// Sum of per-position log-probabilities after BOS.
    pub fn logprob(&self, c: usize, tokens: &[Token]) -> Result<f64> {
        self.check(c, tokens)?;
        Ok(tokens
            .iter()
            .enumerate()
            .skip(1)
            .map(|(t, &tok)| log_softmax_at(self.row(c, t), usize::from(tok)))
            .sum())
    }

    /// Adds `scale * d logprob / d theta` into `grad`.
    pub fn accumulate_logprob_grad(
        &self,
        c: usize,
        tokens: &[Token],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<()> {
        self.check(c, tokens)?;
        if grad.len() != self.logits.len() {
            return Err(Error::PolicyMismatch(
                "gradient buffer has the wrong length".into(),
            ));
        }
        for (t, &tok) in tokens.iter().enumerate().skip(1) {
            let o = self.offset(c, t);
            let p = softmax(self.row(c, t), 1.0);
            for (v, pv) in p.iter().enumerate() {
                grad[o + v] -= scale * pv;
            }
            grad[o + usize::from(tok)] += scale;
        }
        Ok(())
    }

    pub fn sample(&self, c: usize, temperature: f64, seed: u64) -> Vec<Token> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(c, temperature, &mut rng)
    }

    /// Draws tokens until EOS or the maximum length.
    ///
    /// # Panics
    /// If `c` is out of range or `temperature` is not positive.
    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        c: usize,
        temperature: f64,
        rng: &mut R,
    ) -> Vec<Token> {
        assert!(c < self.contexts, "context out of range");
        assert!(temperature > 0.0, "temperature must be positive");
        let mut out = vec![BOS];
        for t in 1..self.scheme.max_len() {
            let p = softmax(self.row(c, t), temperature);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = None;
            for (v, &pv) in p.iter().enumerate() {
                acc += pv;
                if u < acc {
                    pick = Some(v);
                    break;
                }
            }
            // Rounding can leave `acc` a hair under 1.
            let v = pick.unwrap_or_else(|| p.iter().rposition(|&pv| pv > 0.0).unwrap_or(0));
            let tok = v as Token;
            out.push(tok);
            if tok == EOS {
                break;
            }
        }
        out
    }

    /// Per-position argmax sequence, the zero-temperature limit of sampling.
    pub fn argmax_sequence(&self, c: usize) -> Vec<Token> {
        let mut out = vec![BOS];
        for t in 1..self.scheme.max_len() {
            let row = self.row(c, t);
            let mut best = 0;
            for (v, &z) in row.iter().enumerate() {
                if z > row[best] {
                    best = v;
                }
            }
            out.push(best as Token);
            if best as Token == EOS {
                break;
            }
        }
        out
    }

    /// Gradient-descent step `theta -= lr * grad`.
    pub fn descend(&mut self, grad: &[f64], lr: f64) {
        debug_assert_eq!(grad.len(), self.logits.len());
        for (z, g) in self.logits.iter_mut().zip(grad) {
            *z -= lr * g;
        }
    }
}
