//! Maximum-likelihood pretraining.

use super::policy::{softmax, ToyPolicy};
use super::tokens::Token;
use crate::error::{Error, Result};

/// Token counts per logit entry. The tabular model's mean NLL depends on the
/// corpus only through these.
struct Counts {
    n: f64,
    token: Vec<f64>,
    row: Vec<f64>,
}

fn count(policy: &ToyPolicy, corpus: &[(usize, Vec<Token>)]) -> Result<Counts> {
    if corpus.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let v = policy.vocab();
    let mut token = vec![0.0; policy.params().len()];
    let mut row = vec![0.0; policy.params().len() / v];
    for (c, seq) in corpus {
        // logprob performs the shape checks.
        policy.logprob(*c, seq)?;
        for (t, &tok) in seq.iter().enumerate().skip(1) {
            let r = c * policy.positions() + (t - 1);
            row[r] += 1.0;
            token[r * v + usize::from(tok)] += 1.0;
        }
    }
    Ok(Counts {
        n: corpus.len() as f64,
        token,
        row,
    })
}

fn nll_and_grad(policy: &ToyPolicy, counts: &Counts, grad: Option<&mut [f64]>) -> f64 {
    let v = policy.vocab();
    let params = policy.params();
    let mut loss = 0.0;
    let mut grad = grad;
    for (r, &rc) in counts.row.iter().enumerate() {
        if rc == 0.0 {
            continue;
        }
        let logits = &params[r * v..(r + 1) * v];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        let tc = &counts.token[r * v..(r + 1) * v];
        for (k, &n) in tc.iter().enumerate() {
            if n > 0.0 {
                loss -= n * (logits[k] - lse);
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            let p = softmax(logits, 1.0);
            for k in 0..v {
                g[r * v + k] = (rc * p[k] - tc[k]) / counts.n;
            }
        }
    }
    loss / counts.n
}

/// Mean negative log-likelihood of `corpus` under `policy`.
pub fn mean_nll(policy: &ToyPolicy, corpus: &[(usize, Vec<Token>)]) -> Result<f64> {
    let counts = count(policy, corpus)?;
    Ok(nll_and_grad(policy, &counts, None))
}

/// Full-batch gradient descent on mean NLL.
///
/// The history holds the loss before each epoch followed by the final loss,
/// so it has `epochs + 1` entries.
pub fn nll_pretrain(
    policy: &ToyPolicy,
    corpus: &[(usize, Vec<Token>)],
    epochs: usize,
    lr: f64,
) -> Result<(ToyPolicy, Vec<f64>)> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    let counts = count(policy, corpus)?;
    let mut out = policy.clone();
    let mut grad = vec![0.0; out.params().len()];
    let mut history = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        history.push(nll_and_grad(&out, &counts, Some(&mut grad)));
        out.descend(&grad, lr);
    }
    history.push(nll_and_grad(&out, &counts, None));
    log::debug!(
        "pretrain: {} epochs, nll {:.4} -> {:.4}",
        epochs,
        history[0],
        history[epochs]
    );
    Ok((out, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmpo::tokens::{TokenScheme, BOS, EOS};

    #[test]
    fn zero_epochs_is_identity() {
        let p = ToyPolicy::new(TokenScheme::new(4, 1), 1);
        let (q, h) = nll_pretrain(&p, &[(0, vec![BOS, EOS])], 0, 1.0).unwrap();
        assert_eq!(q, p);
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn gradient_matches_logprob_gradient() {
        let mut p = ToyPolicy::new(TokenScheme::new(4, 1), 2);
        for (i, z) in p.params_mut().iter_mut().enumerate() {
            *z = ((i * 13 % 7) as f64) / 3.0;
        }
        let s = p.scheme().clone();
        let seq = vec![
            BOS,
            5,
            s.bin_token(0),
            s.bin_token(1),
            s.bin_token(2),
            s.bin_token(3),
            2,
            EOS,
        ];
        let corpus = vec![(1, seq.clone()), (0, vec![BOS, EOS])];
        let counts = count(&p, &corpus).unwrap();
        let mut g = vec![0.0; p.params().len()];
        nll_and_grad(&p, &counts, Some(&mut g));
        let mut want = vec![0.0; p.params().len()];
        p.accumulate_logprob_grad(1, &seq, -0.5, &mut want).unwrap();
        p.accumulate_logprob_grad(0, &[BOS, EOS], -0.5, &mut want)
            .unwrap();
        for (a, b) in g.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_corpus() {
        let p = ToyPolicy::new(TokenScheme::new(4, 1), 1);
        assert!(matches!(
            nll_pretrain(&p, &[], 3, 1.0),
            Err(Error::EmptyBatch)
        ));
    }
}
