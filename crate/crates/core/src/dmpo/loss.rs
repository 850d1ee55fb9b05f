//! Preference losses: plain DPO, fixed-margin DPO and the dynamic margin.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::policy::ToyPolicy;
use super::tokens::Token;
use crate::error::{Error, Result};

/// Evaluator score gap between winner and loser. `None` signals a pair that
/// must be skipped (tie or inverted order).
pub fn margin(e_plus: f64, e_minus: f64) -> Result<Option<f64>> {
    for s in [e_plus, e_minus] {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ScoreOutOfRange(s));
        }
    }
    let d = e_plus - e_minus;
    Ok((d > 0.0).then_some(d))
}

/// `e^d - e^-d`, the margin transform. Evaluated as `2 sinh d`, which avoids
/// cancellation near zero.
pub fn f_transform(delta: f64) -> f64 {
    2.0 * delta.sinh()
}

/// `-ln(sigmoid(z))`, stable for large `|z|`.
pub fn neg_log_sigmoid(z: f64) -> f64 {
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `sigmoid(z)`, stable for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "m")]
pub enum MarginKind {
    Dpo,
    Fixed(f64),
    Dynamic,
}

impl MarginKind {
    /// The six settings compared by the ablation harness.
    pub const ABLATION: [MarginKind; 6] = [
        MarginKind::Dpo,
        MarginKind::Fixed(0.5),
        MarginKind::Fixed(1.0),
        MarginKind::Fixed(1.5),
        MarginKind::Fixed(2.0),
        MarginKind::Dynamic,
    ];

    /// The subtracted margin for a pair with score gap `delta`.
    pub fn offset(self, delta: f64) -> f64 {
        match self {
            MarginKind::Dpo => 0.0,
            MarginKind::Fixed(m) => m,
            MarginKind::Dynamic => f_transform(delta),
        }
    }

    pub fn parse(s: &str) -> Option<MarginKind> {
        match s {
            "dpo" => Some(MarginKind::Dpo),
            "dmpo" | "dynamic" => Some(MarginKind::Dynamic),
            _ => {
                let m = s
                    .strip_prefix("fixed:")
                    .or_else(|| s.strip_prefix("fixed="))?;
                m.parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .map(MarginKind::Fixed)
            }
        }
    }
}

impl fmt::Display for MarginKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginKind::Dpo => f.write_str("dpo"),
            MarginKind::Fixed(m) => write!(f, "fixed:{m}"),
            MarginKind::Dynamic => f.write_str("dmpo"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferencePair {
    pub context: usize,
    pub winner: Vec<Token>,
    pub loser: Vec<Token>,
    pub winner_score: f64,
    pub loser_score: f64,
}

impl PreferencePair {
    pub fn new(
        context: usize,
        winner: Vec<Token>,
        loser: Vec<Token>,
        winner_score: f64,
        loser_score: f64,
    ) -> Result<Self> {
        if margin(winner_score, loser_score)?.is_none() {
            return Err(Error::InvalidPair(format!(
                "winner score {winner_score} does not exceed loser score {loser_score}"
            )));
        }
        if winner == loser {
            return Err(Error::InvalidPair(
                "winner and loser are the same sequence".into(),
            ));
        }
        Ok(PreferencePair {
            context,
            winner,
            loser,
            winner_score,
            loser_score,
        })
    }

    /// Orders two scored candidates; `Ok(None)` for ties and identical sequences.
    pub fn from_candidates(
        context: usize,
        a: (Vec<Token>, f64),
        b: (Vec<Token>, f64),
    ) -> Result<Option<Self>> {
        let (w, l) = if a.1 >= b.1 { (a, b) } else { (b, a) };
        if margin(w.1, l.1)?.is_none() || w.0 == l.0 {
            return Ok(None);
        }
        Ok(Some(PreferencePair {
            context,
            winner: w.0,
            loser: l.0,
            winner_score: w.1,
            loser_score: l.1,
        }))
    }

    pub fn delta(&self) -> f64 {
        self.winner_score - self.loser_score
    }
}

/// Loss from precomputed log-ratios `logp_theta - logp_ref` of winner and loser.
pub fn loss_from_log_ratios(
    kind: MarginKind,
    beta: f64,
    ratio_plus: f64,
    ratio_minus: f64,
    delta: f64,
) -> f64 {
    neg_log_sigmoid(beta * (ratio_plus - ratio_minus) - kind.offset(delta))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("beta must be positive, got {beta}")))
    }
}

/// Adds `scale * dL/dtheta` into `grad` and returns the loss.
pub fn preference_loss_into(
    kind: MarginKind,
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    pair: &PreferencePair,
    beta: f64,
    scale: f64,
    grad: &mut [f64],
) -> Result<f64> {
    check_beta(beta)?;
    policy.ensure_same_shape(reference)?;
    let c = pair.context;
    let rp = policy.logprob(c, &pair.winner)? - reference.logprob(c, &pair.winner)?;
    let rm = policy.logprob(c, &pair.loser)? - reference.logprob(c, &pair.loser)?;
    let z = beta * (rp - rm) - kind.offset(pair.delta());
    // dL/dz = -sigmoid(-z)
    let dz = -sigmoid(-z);
    policy.accumulate_logprob_grad(c, &pair.winner, scale * dz * beta, grad)?;
    policy.accumulate_logprob_grad(c, &pair.loser, -scale * dz * beta, grad)?;
    Ok(neg_log_sigmoid(z))
}

/// Loss and its gradient with respect to the policy logits.
pub fn preference_loss(
    kind: MarginKind,
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    pair: &PreferencePair,
    beta: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; policy.params().len()];
    let loss = preference_loss_into(kind, policy, reference, pair, beta, 1.0, &mut grad)?;
    Ok((loss, grad))
}
