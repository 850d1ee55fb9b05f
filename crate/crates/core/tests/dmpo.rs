//! Behaviour of the toy policy, pretraining and preference alignment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unilayout::dmpo::policy::softmax;
use unilayout::dmpo::tokens::{BOS, EOS};
use unilayout::dmpo::{
    checkpoint, dmpo_train, evaluate_policy, mean_nll, nll_pretrain, preference_loss, MarginKind, PreferencePair,
    PromptContext, Token, TokenScheme, ToyPolicy, TrainConfig,
};
use unilayout::{Error, Layout, SceneContext, TaskKind};

fn small_policy() -> ToyPolicy {
    ToyPolicy::new(TokenScheme::new(4, 2), 2)
}

#[test]
fn sampling_frequencies_match_softmax() {
    let mut p = small_policy();
    for (v, z) in p.row_mut(1, 1).iter_mut().enumerate() {
        *z = (v as f64 * 0.37).sin() * 2.0;
    }
    let temperature = 0.8;
    let probs = softmax(p.row(1, 1), temperature);
    let n = 100_000usize;
    let mut counts = vec![0usize; p.vocab()];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..n {
        let s = p.sample_with(1, temperature, &mut rng);
        counts[usize::from(s[1])] += 1;
    }
    for (v, (&c, &q)) in counts.iter().zip(&probs).enumerate() {
        let mean = n as f64 * q;
        let sd = (n as f64 * q * (1.0 - q)).sqrt();
        assert!(
            (c as f64 - mean).abs() <= 3.0 * sd.max(1.0),
            "token {v}: {c} draws, expected {mean:.1} +- {sd:.1}"
        );
    }
}

#[test]
fn low_temperature_sampling_approaches_argmax() {
    let mut p = small_policy();
    for (i, z) in p.params_mut().iter_mut().enumerate() {
        *z = (i as f64 * 0.61).sin();
    }
    assert_eq!(p.sample(0, 1e-4, 3), p.argmax_sequence(0));
}

#[test]
fn samples_start_with_bos_and_respect_the_length() {
    let p = small_policy();
    for seed in 0..200 {
        let s = p.sample(0, 1.0, seed);
        assert_eq!(s[0], BOS);
        assert!(s.len() <= p.scheme().max_len());
        assert!(s.len() == p.scheme().max_len() || *s.last().unwrap() == EOS);
        assert!(p.logprob(0, &s).unwrap() <= 0.0);
    }
}

fn two_sequence_corpus(p: &ToyPolicy) -> Vec<(usize, Vec<Token>)> {
    let s = p.scheme().clone();
    let a = vec![BOS, s.category_token(&unilayout::Category::Text).unwrap(), s.bin_token(0), s.bin_token(0), s.bin_token(1), s.bin_token(1), unilayout::dmpo::tokens::SEP, EOS];
    let mut b = a.clone();
    b[2] = s.bin_token(2);
    vec![(0, a), (0, b)]
}

#[test]
fn pretraining_descends_toward_the_corpus_entropy() {
    let p = small_policy();
    let corpus = two_sequence_corpus(&p);
    let (trained, hist) = nll_pretrain(&p, &corpus, 400, 2.0).unwrap();
    assert_eq!(hist.len(), 401);
    assert!(hist.windows(2).all(|w| w[1] <= w[0] + 1e-12), "history is not monotone");
    // The two sequences differ in one token, so the best mean NLL is ln 2.
    let nll = mean_nll(&trained, &corpus).unwrap();
    assert!((nll - std::f64::consts::LN_2).abs() < 0.05, "nll {nll}");
    assert!(nll >= std::f64::consts::LN_2 - 1e-12);
    assert!((hist[400] - nll).abs() < 1e-12);
}

#[test]
fn pretraining_rejects_bad_input() {
    let p = small_policy();
    assert!(matches!(nll_pretrain(&p, &[], 3, 1.0), Err(Error::EmptyBatch)));
    assert!(matches!(nll_pretrain(&p, &two_sequence_corpus(&p), 3, 0.0), Err(Error::Config(_))));
    assert!(nll_pretrain(&p, &[(0, vec![EOS])], 3, 1.0).is_err());
    assert!(nll_pretrain(&p, &[(9, vec![BOS, EOS])], 3, 1.0).is_err());
}

#[test]
fn dmpo_exceeds_dpo_for_a_positive_gap() {
    let p = small_policy();
    let corpus = two_sequence_corpus(&p);
    let pair = PreferencePair::new(0, corpus[0].1.clone(), corpus[1].1.clone(), 0.9, 0.2).unwrap();
    let (dpo, g_dpo) = preference_loss(MarginKind::Dpo, &p, &p, &pair, 0.1).unwrap();
    let (dmpo, g_dmpo) = preference_loss(MarginKind::Dynamic, &p, &p, &pair, 0.1).unwrap();
    assert!((dpo - std::f64::consts::LN_2).abs() < 1e-15);
    let want = (1.0 + (0.7f64.exp() - (-0.7f64).exp()).exp()).ln();
    assert!((dmpo - want).abs() < 1e-12);
    // A larger margin pushes harder in the same direction.
    let dot: f64 = g_dpo.iter().zip(&g_dmpo).map(|(a, b)| a * b).sum();
    assert!(dot > 0.0);
    assert!(g_dmpo.iter().map(|g| g.abs()).sum::<f64>() > g_dpo.iter().map(|g| g.abs()).sum::<f64>());
}

#[test]
fn mismatched_reference_is_rejected() {
    let p = small_policy();
    let q = ToyPolicy::new(TokenScheme::new(5, 2), 2);
    let pair = PreferencePair::new(0, vec![BOS, EOS], vec![BOS, 3, EOS], 0.9, 0.1).unwrap();
    assert!(matches!(preference_loss(MarginKind::Dpo, &p, &q, &pair, 0.1), Err(Error::PolicyMismatch(_))));
    assert!(preference_loss(MarginKind::Dpo, &p, &p, &pair, 0.0).is_err());
}

/// Rewards short layouts: the empty layout scores 1, each element costs 0.3.
fn brevity(_: &PromptContext, l: &Layout) -> f64 {
    (1.0 - 0.3 * l.len() as f64).max(0.0)
}

fn contexts() -> Vec<PromptContext> {
    vec![PromptContext::new(TaskKind::Bfef, 513, 750, SceneContext::empty())]
}

fn tiny_trainable() -> ToyPolicy {
    ToyPolicy::new(TokenScheme::new(4, 2), unilayout::dmpo::NUM_CONTEXTS)
}

#[test]
fn training_leaves_the_reference_untouched_and_is_deterministic() {
    let p = tiny_trainable();
    let before = checkpoint::to_bytes(&p);
    let cfg = TrainConfig {
        steps: 30,
        probe_every: 10,
        probe_samples: 16,
        seed: 9,
        ..TrainConfig::default()
    };
    let (a, ha) = dmpo_train(&p, &brevity, &contexts(), &cfg).unwrap();
    let (b, hb) = dmpo_train(&p, &brevity, &contexts(), &cfg).unwrap();
    assert_eq!(checkpoint::to_bytes(&p), before);
    assert_eq!(checkpoint::to_bytes(&a), checkpoint::to_bytes(&b));
    assert_eq!(ha, hb);
    assert_eq!(ha.records.len(), 30);
    assert_eq!(ha.probes.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 10, 20, 30]);
    let (c, _) = dmpo_train(&p, &brevity, &contexts(), &TrainConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(checkpoint::to_bytes(&a), checkpoint::to_bytes(&c));
}

#[test]
fn alignment_raises_the_evaluator_score() {
    let p = tiny_trainable();
    let cfg = TrainConfig {
        steps: 150,
        probe_every: 0,
        ..TrainConfig::default()
    };
    let eval = |q: &ToyPolicy| evaluate_policy(q, &brevity, &contexts(), 256, 1.0, 77, 1.0).unwrap();
    let before = eval(&p);
    let (aligned, hist) = dmpo_train(&p, &brevity, &contexts(), &cfg).unwrap();
    let after = eval(&aligned);
    assert!(after.mean_score > before.mean_score + 0.2, "{before:?} -> {after:?}");
    assert!(hist.records.iter().all(|r| r.loss.is_finite() && r.loss >= 0.0));
}

#[test]
fn constant_feedback_on_well_formed_samples_is_degenerate() {
    // With every row peaked on EOS, all samples are the same empty layout.
    let mut p = tiny_trainable();
    for c in 0..p.contexts() {
        for t in 1..p.scheme().max_len() {
            p.row_mut(c, t)[usize::from(EOS)] = 60.0;
        }
    }
    let cfg = TrainConfig {
        steps: 3,
        probe_every: 0,
        ..TrainConfig::default()
    };
    let r = dmpo_train(&p, &|_: &PromptContext, _: &Layout| 0.5, &contexts(), &cfg);
    assert!(matches!(r, Err(Error::DegenerateFeedback { step: 0, .. })), "{r:?}");
}

#[test]
fn out_of_range_evaluator_scores_are_errors() {
    let p = tiny_trainable();
    let cfg = TrainConfig {
        steps: 1,
        probe_every: 0,
        ..TrainConfig::default()
    };
    let r = dmpo_train(&p, &|_: &PromptContext, _: &Layout| 1.5, &contexts(), &cfg);
    assert!(matches!(r, Err(Error::ScoreOutOfRange(_))), "{r:?}");
}

#[test]
fn checkpoint_files_roundtrip_and_reject_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = small_policy();
    p.params_mut()[5] = 1.25;
    let path = dir.path().join("p.ultp");
    checkpoint::save(&p, &path).unwrap();
    let q = checkpoint::load(&path).unwrap();
    assert_eq!(q.params(), p.params());
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    assert!(matches!(checkpoint::from_bytes(&bytes), Err(Error::Checkpoint(_))));
    bytes[0] = b'U';
    bytes.push(0);
    assert!(checkpoint::from_bytes(&bytes).is_err());
}
