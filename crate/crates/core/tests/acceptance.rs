//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{disjoint_layout, random_layout, H, W};
use unilayout::dataset::{corpus_iter, generate_corpus, save_corpus, CorpusSpec};
use unilayout::dmpo::loss::loss_from_log_ratios;
use unilayout::dmpo::{
    ablation_harness, checkpoint, dmpo_train, f_transform, nll_pretrain, preference_loss, rule_evaluator, AblationConfig,
    MarginKind, PreferencePair, PromptContext, TokenScheme, ToyPolicy, TrainConfig, TrainingData, NUM_CONTEXTS,
};
use unilayout::io::encode_ppm;
use unilayout::metrics::{max_iou_with, overlap, Solver};
use unilayout::prompt::{parse_layout, serialize_layout};
use unilayout::qualify::{self, Label, RuleConfig, RuleId};
use unilayout::render::{visualize, ColorMap};
use unilayout::{BBox, Category, Layout, SaliencyMap, SceneContext, TaskKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed < Duration::from_secs(limit_s)
}

// ---------------------------------------------------------------- metrics

/// Pixel sets as bitmaps over the canvas.
fn bitmap(b: &BBox, w: u32, h: u32) -> Vec<u64> {
    let n = (w as usize * h as usize).div_ceil(64);
    let mut bits = vec![0u64; n];
    for y in b.y_min..b.y_max.min(h) {
        for x in b.x_min..b.x_max.min(w) {
            let i = y as usize * w as usize + x as usize;
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

fn popcount(v: &[u64]) -> u64 {
    v.iter().map(|w| u64::from(w.count_ones())).sum()
}

/// Mean pairwise IoU by counting pixels, with the underlay nesting
/// exemption decided on pixel sets.
fn raster_overlap(l: &Layout) -> f64 {
    let maps: Vec<Vec<u64>> = l.boxes().map(|b| bitmap(b, l.canvas_w, l.canvas_h)).collect();
    let (mut sum, mut pairs) = (0.0, 0usize);
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            let inter: Vec<u64> = maps[i].iter().zip(&maps[j]).map(|(a, b)| a & b).collect();
            let ni = popcount(&inter);
            let (na, nb) = (popcount(&maps[i]), popcount(&maps[j]));
            if l.task.background_constrained() {
                let ui = l.elements[i].category.is_underlay() && ni == nb;
                let uj = l.elements[j].category.is_underlay() && ni == na;
                if ui || uj {
                    continue;
                }
            }
            pairs += 1;
            sum += if ni == 0 { 0.0 } else { ni as f64 / (na + nb - ni) as f64 };
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

fn ascending_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

/// Best injective matching of the smaller side into the larger, by trying
/// every ordered selection.
fn best_matching(weights: &[Vec<f64>]) -> Vec<f64> {
    let rows = weights.len();
    let cols = weights[0].len();
    let transpose = rows > cols;
    let w: Vec<Vec<f64>> = if transpose {
        (0..cols).map(|c| (0..rows).map(|r| weights[r][c]).collect()).collect()
    } else {
        weights.to_vec()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut used = vec![false; w[0].len()];
    let mut picked = Vec::new();
    fn go(w: &[Vec<f64>], r: usize, used: &mut [bool], picked: &mut Vec<f64>, best: &mut Option<(f64, Vec<f64>)>) {
        if r == w.len() {
            let s = ascending_sum(picked.clone());
            if best.as_ref().is_none_or(|b| s > b.0) {
                *best = Some((s, picked.clone()));
            }
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                picked.push(w[r][c]);
                go(w, r + 1, used, picked, best);
                picked.pop();
                used[c] = false;
            }
        }
    }
    go(&w, 0, &mut used, &mut picked, &mut best);
    best.map(|b| b.1).unwrap_or_default()
}

fn permutation_max_iou(g: &Layout, r: &Layout) -> f64 {
    let denom = g.len().max(r.len());
    if denom == 0 {
        return 1.0;
    }
    let mut groups: BTreeMap<&Category, (Vec<&BBox>, Vec<&BBox>)> = BTreeMap::new();
    for e in &g.elements {
        groups.entry(&e.category).or_default().0.push(&e.bbox);
    }
    for e in &r.elements {
        groups.entry(&e.category).or_default().1.push(&e.bbox);
    }
    let mut all = Vec::new();
    for (a, b) in groups.values() {
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let weights: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| x.iou(y)).collect()).collect();
        all.extend(best_matching(&weights));
    }
    ascending_sum(all) / denom as f64
}

fn per_category_max(l: &Layout) -> usize {
    let mut m: BTreeMap<&Category, usize> = BTreeMap::new();
    for e in &l.elements {
        *m.entry(&e.category).or_default() += 1;
    }
    m.values().copied().max().unwrap_or(0)
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cats = [Category::Text, Category::Logo, Category::Underlay];
    let mut worst = 0.0f64;
    let (mut compared, mut mismatches) = (0, 0);
    for i in 0..200 {
        let task = TaskKind::ALL[i % 4];
        let g = random_layout(&mut rng, task, 12, &cats);
        let r = random_layout(&mut rng, task, 12, &cats);
        worst = worst.max((overlap(&g) - raster_overlap(&g)).abs());
        if per_category_max(&g) <= 6 && per_category_max(&r) <= 6 {
            compared += 1;
            let oracle = permutation_max_iou(&g, &r);
            if max_iou_with(&g, &r, Solver::Hungarian) != oracle || max_iou_with(&g, &r, Solver::Auto) != oracle {
                mismatches += 1;
            }
        }
    }
    let el = t.elapsed();
    outcome(
        worst <= 2e-3 && mismatches == 0 && compared > 0 && within(el, 60),
        format!("overlap max |analytic - raster| = {worst:.2e}; max_iou mismatches {mismatches}/{compared}; {el:.1?}"),
    )
}

// ---------------------------------------------------------------- rules

fn bc_scene() -> SceneContext {
    SceneContext::empty()
        .with_background(GrayImage::from_pixel(W, H, Luma([128])))
        .with_saliency(SaliencyMap::filled(W, H, 0.0))
}

fn fired(items: &[(Category, [u32; 4])]) -> BTreeSet<RuleId> {
    let mut l = Layout::new(W, H, TaskKind::Bcef);
    for (c, b) in items {
        l.push(c.clone(), BBox::from(*b));
    }
    let v = qualify::qualify(&l, &bc_scene(), &RuleConfig::default()).expect("fixture is valid");
    v.violations.iter().map(|v| v.rule).collect()
}

fn criterion_2() -> Outcome {
    use Category::{Logo, Text, Underlay};
    let third = u64::from(W) * u64::from(H) / 3;
    assert_eq!(u64::from(W) * 250, third, "fixture canvas assumption");
    let cases: Vec<(&str, Vec<(Category, [u32; 4])>, Option<RuleId>, bool)> = vec![
        ("area 999 (9x111)", vec![(Logo, [100, 100, 109, 211])], Some(RuleId::ExtremeSmall), true),
        ("area 1000 (10x100)", vec![(Logo, [100, 100, 110, 200])], Some(RuleId::ExtremeSmall), false),
        ("height 29", vec![(Logo, [100, 100, 200, 129])], Some(RuleId::ExtremeSmall), true),
        ("height 30", vec![(Logo, [100, 100, 200, 130])], Some(RuleId::ExtremeSmall), false),
        ("coverage 513x251", vec![(Logo, [0, 0, 513, 251])], Some(RuleId::ExtremeLarge), true),
        ("coverage exactly a third", vec![(Logo, [0, 0, 513, 250])], Some(RuleId::ExtremeLarge), false),
        ("orphan underlay", vec![(Underlay, [50, 50, 250, 150])], Some(RuleId::InvalidUnderlay), true),
        (
            "underlay containing text",
            vec![(Underlay, [40, 40, 300, 140]), (Text, [48, 48, 292, 132])],
            None,
            false,
        ),
    ];
    let mut failures = Vec::new();
    for (name, items, rule, expect) in &cases {
        let got = fired(items);
        let ok = match rule {
            Some(r) => got.contains(r) == *expect,
            None => got.is_empty(),
        };
        if !ok {
            failures.push(format!("{name}: fired {got:?}"));
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{}/{} fixtures", cases.len(), cases.len())
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------- closure

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let spec = TaskKind::ALL.into_iter().fold(CorpusSpec::new(2024), |s, k| s.with_count(k, 500));
    let cfg = RuleConfig::default();
    let (mut n, mut agree) = (0usize, 0usize);
    let mut tasks = BTreeSet::new();
    for s in corpus_iter(&spec, &cfg).expect("valid spec") {
        let predicted = qualify::qualify(&s.layout, &s.ctx, &cfg).map(|v| v.label).unwrap_or(Label::Unqualified);
        n += 1;
        agree += usize::from(predicted == s.label);
        tasks.insert(s.layout.task);
    }
    let el = t.elapsed();
    let acc = agree as f64 / n as f64;
    outcome(
        n == 2000 && tasks.len() == 4 && acc == 1.0 && within(el, 30),
        format!("accuracy {acc:.4} on {n} samples over {} tasks; {el:.1?}", tasks.len()),
    )
}

// ---------------------------------------------------------------- dmpo loss

fn random_policy(rng: &mut ChaCha8Rng) -> ToyPolicy {
    let mut p = ToyPolicy::new(TokenScheme::new(4, 2), NUM_CONTEXTS);
    for v in p.params_mut() {
        *v = rng.random_range(-2.0..2.0);
    }
    p
}

fn random_pair(rng: &mut ChaCha8Rng, p: &ToyPolicy) -> PreferencePair {
    let c = rng.random_range(0..NUM_CONTEXTS);
    loop {
        let a = p.sample(c, 1.0, rng.random());
        let b = p.sample(c, 1.0, rng.random());
        if a == b {
            continue;
        }
        let hi: f64 = rng.random_range(0.05..=1.0);
        let lo = rng.random_range(0.0..hi);
        return PreferencePair::new(c, a, b, hi, lo).expect("valid pair");
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let mut worst_a = 0.0f64;
    for _ in 0..1000 {
        let beta = rng.random_range(0.01..2.0);
        let rp = rng.random_range(-20.0..20.0);
        let rm = rng.random_range(-20.0..20.0);
        let dmpo = loss_from_log_ratios(MarginKind::Dynamic, beta, rp, rm, 0.0);
        let dpo = loss_from_log_ratios(MarginKind::Dpo, beta, rp, rm, 0.0);
        worst_a = worst_a.max((dmpo - dpo).abs());
    }
    let a = worst_a < 1e-12;

    let kinds = [MarginKind::Dpo, MarginKind::Fixed(0.7), MarginKind::Dynamic];
    let mut worst_b = 0.0f64;
    let mut leaked = false;
    for i in 0..100 {
        let policy = random_policy(&mut rng);
        let reference = random_policy(&mut rng);
        let pair = random_pair(&mut rng, &policy);
        let beta = rng.random_range(0.05..1.0);
        let kind = kinds[i % 3];
        let (_, grad) = preference_loss(kind, &policy, &reference, &pair, beta).unwrap();
        let block = policy.positions() * policy.vocab();
        let range = pair.context * block..(pair.context + 1) * block;
        leaked |= grad.iter().enumerate().any(|(j, g)| !range.contains(&j) && *g != 0.0);
        let h = 1e-5;
        let mut fd = Vec::with_capacity(block);
        let mut probe = policy.clone();
        for j in range.clone() {
            let orig = probe.params()[j];
            probe.params_mut()[j] = orig + h;
            let up = preference_loss(kind, &probe, &reference, &pair, beta).unwrap().0;
            probe.params_mut()[j] = orig - h;
            let down = preference_loss(kind, &probe, &reference, &pair, beta).unwrap().0;
            probe.params_mut()[j] = orig;
            fd.push((up - down) / (2.0 * h));
        }
        let analytic = &grad[range];
        let diff: Vec<f64> = analytic.iter().zip(&fd).map(|(x, y)| x - y).collect();
        let scale = norm(analytic).max(norm(&fd));
        if scale > 1e-12 {
            worst_b = worst_b.max(norm(&diff) / scale);
        }
    }
    let b = worst_b < 1e-5 && !leaked;

    let c_err = (f_transform(1.0) - (std::f64::consts::E - 1.0 / std::f64::consts::E)).abs();
    let c = c_err < 1e-12;

    let mut d = true;
    for _ in 0..50 {
        let beta = rng.random_range(0.01..1.0);
        let rp = rng.random_range(-5.0..5.0);
        let rm = rng.random_range(-5.0..5.0);
        let losses: Vec<f64> = (1..=100)
            .map(|k| loss_from_log_ratios(MarginKind::Dynamic, beta, rp, rm, k as f64 / 100.0))
            .collect();
        d &= losses.windows(2).all(|w| w[1] > w[0]);
    }

    outcome(
        a && b && c && d,
        format!(
            "(a) max |dmpo - dpo| at f=0: {worst_a:.1e}; (b) max rel grad err {worst_b:.1e}{}; (c) |f(1) - (e - 1/e)| = {c_err:.1e}; (d) monotone: {d}",
            if leaked { ", gradient leaked outside the context" } else { "" }
        ),
    )
}

// ---------------------------------------------------------------- alignment

struct Setup {
    pretrained: ToyPolicy,
    contexts: Vec<PromptContext>,
}

fn pretrain(seed: u64) -> Setup {
    let mut spec = TaskKind::ALL.into_iter().fold(CorpusSpec::new(seed), |s, t| s.with_count(t, 100));
    spec.max_elements = 3;
    let scheme = TokenScheme::default();
    let mut data = TrainingData::default();
    for s in corpus_iter(&spec, &RuleConfig::default()).unwrap() {
        data.add(&scheme, &s.layout, &s.ctx);
    }
    assert_eq!(data.skipped, 0);
    let (pretrained, _) = nll_pretrain(&ToyPolicy::new(scheme, NUM_CONTEXTS), &data.sequences, 300, 1.0).unwrap();
    Setup {
        pretrained,
        contexts: data.contexts,
    }
}

fn criterion_5(setup: &Setup) -> Outcome {
    let t = Instant::now();
    let evaluator = rule_evaluator(RuleConfig::default());
    let train = TrainConfig {
        probe_every: 0,
        ..TrainConfig::default()
    };
    let mut cfg = AblationConfig::new(0..5, train);
    cfg.settings = vec![MarginKind::Dpo, MarginKind::Dynamic];
    cfg.eval_samples = 256;
    let table = ablation_harness(&setup.pretrained, &evaluator, &setup.contexts, &cfg).unwrap();
    let base = table.baseline.pass_rate;
    let dpo = table.row(MarginKind::Dpo).unwrap().pass_rate;
    let dmpo = table.row(MarginKind::Dynamic).unwrap().pass_rate;
    let el = t.elapsed();
    outcome(
        dmpo - base >= 0.10 && dmpo >= dpo && within(el, 300),
        format!(
            "pass rate pretrained {base:.4}, dpo {dpo:.4}, dmpo {dmpo:.4} (+{:.1} points) over 5 seeds; {el:.1?}",
            100.0 * (dmpo - base)
        ),
    )
}

fn criterion_6(setup: &Setup) -> Outcome {
    let evaluator = rule_evaluator(RuleConfig::default());
    let mut identical = true;
    for seed in 0..3 {
        let base = TrainConfig {
            steps: 40,
            seed,
            probe_every: 10,
            probe_samples: 16,
            ..TrainConfig::default()
        };
        let (p_dpo, h_dpo) = dmpo_train(&setup.pretrained, &evaluator, &setup.contexts, &TrainConfig { margin: MarginKind::Dpo, ..base.clone() }).unwrap();
        let (p_zero, h_zero) = dmpo_train(&setup.pretrained, &evaluator, &setup.contexts, &TrainConfig { margin: MarginKind::Fixed(0.0), ..base }).unwrap();
        let same_params = p_dpo.params().iter().zip(p_zero.params()).all(|(a, b)| a.to_bits() == b.to_bits());
        let same_loss = h_dpo.records.len() == h_zero.records.len()
            && h_dpo.records.iter().zip(&h_zero.records).all(|(a, b)| a.loss.to_bits() == b.loss.to_bits() && a == b);
        identical &= same_params && same_loss && h_dpo.probes == h_zero.probes;
    }
    let train = TrainConfig {
        steps: 5,
        probe_every: 0,
        ..TrainConfig::default()
    };
    let mut cfg = AblationConfig::new([0], train);
    cfg.eval_samples = 8;
    let table = ablation_harness(&setup.pretrained, &evaluator, &setup.contexts, &cfg).unwrap();
    let settings: Vec<String> = table.rows.iter().map(|r| r.setting.clone()).collect();
    let want: Vec<String> = MarginKind::ABLATION.iter().map(|m| m.to_string()).collect();
    let six = settings == want && table.to_csv().lines().count() == 1 + 1 + 6;
    outcome(
        identical && six,
        format!("fixed:0 vs dpo bit-identical over 3 seeds: {identical}; settings {}", settings.join(", ")),
    )
}

// ---------------------------------------------------------------- roundtrips

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn criterion_7(setup: &Setup) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parse_failures = 0;
    for i in 0..1000 {
        let task = TaskKind::ALL[i % 4];
        let mut l = random_layout(&mut rng, task, 8, &Category::KNOWN);
        l.elements.retain(|e| e.bbox.is_valid());
        let text = serialize_layout(&l);
        match parse_layout(&text, W, H, task) {
            Ok(p) if p.layout == l && p.warnings.is_empty() => {}
            _ if l.is_empty() => {}
            _ => parse_failures += 1,
        }
    }

    let scheme = TokenScheme::default();
    let grid = f64::from(scheme.grid);
    let (bound_x, bound_y) = (f64::from(W) / (2.0 * grid), f64::from(H) / (2.0 * grid));
    let (mut worst_center, mut worst_pixel) = (0.0f64, 0.0f64);
    let mut over = 0;
    for _ in 0..1000 {
        let l = random_layout(&mut rng, TaskKind::Bfef, 8, &Category::KNOWN);
        let tokens = scheme.tokenize(&l).unwrap();
        let decoded = scheme.decode(&tokens, W, H).unwrap();
        let back = scheme.detokenize(&tokens, W, H, TaskKind::Bfef).unwrap();
        for ((e, d), b) in l.elements.iter().zip(&decoded).zip(&back.elements) {
            let orig = <[u32; 4]>::from(e.bbox);
            let ints = <[u32; 4]>::from(b.bbox);
            for k in 0..4 {
                let bound = if k % 2 == 0 { bound_x } else { bound_y };
                let err = (d.centers[k] - f64::from(orig[k])).abs();
                worst_center = worst_center.max(err / bound);
                over += usize::from(err > bound);
                worst_pixel = worst_pixel.max((f64::from(ints[k]) - f64::from(orig[k])).abs() - bound);
            }
        }
    }

    let spec = TaskKind::ALL.into_iter().fold(CorpusSpec::new(77), |s, t| s.with_count(t, 6));
    let cfg = RuleConfig::default();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut ckpts = Vec::new();
    let mut renders = Vec::new();
    for d in &dirs {
        let corpus = generate_corpus(&spec, &cfg).unwrap();
        save_corpus(&corpus, d.path()).unwrap();
        let frames: Vec<Vec<u8>> = corpus
            .iter()
            .map(|s| encode_ppm(&visualize(&s.layout, &s.ctx, &ColorMap::default()).unwrap()))
            .collect();
        renders.push(frames);
        let tc = TrainConfig {
            steps: 10,
            seed: 5,
            ..TrainConfig::default()
        };
        let (p, _) = dmpo_train(&setup.pretrained, &rule_evaluator(cfg), &setup.contexts, &tc).unwrap();
        let path = d.path().join("aligned.ultp");
        checkpoint::save(&p, &path).unwrap();
        ckpts.push(fs::read(&path).unwrap());
    }
    let [a, b] = [dir_bytes(dirs[0].path()), dir_bytes(dirs[1].path())];
    let rasters = a.keys().filter(|k| k.ends_with(".pgm")).count();
    let same = a == b && renders[0] == renders[1] && ckpts[0] == ckpts[1];
    outcome(
        parse_failures == 0 && over == 0 && worst_pixel <= 1.0 && same && rasters > 0,
        format!(
            "parse/serialize failures {parse_failures}/1000; token error max {:.3} of dim/(2G) ({over} over), integer decode within bound + {worst_pixel:.2} px; \
             {} corpus files ({rasters} rasters), renders and checkpoints identical: {same}",
            worst_center,
            a.len()
        ),
    )
}

// ---------------------------------------------------------------- render

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cmap = ColorMap::default();
    let (w, h) = (160, 120);
    let (mut set_ok, mut bytes_ok) = (0, 0);
    for i in 0..20 {
        let task = if i % 2 == 0 { TaskKind::Bfef } else { TaskKind::Bcef };
        let layout = disjoint_layout(&mut rng, task, w, h, 6);
        let mut ctx = SceneContext::empty();
        let base = if task.background_constrained() {
            let bg = GrayImage::from_fn(w, h, |_, _| Luma([rng.random()]));
            ctx = ctx.with_background(bg.clone());
            bg
        } else {
            GrayImage::from_pixel(w, h, Luma([255]))
        };
        let img = visualize(&layout, &ctx, &cmap).unwrap();

        let mut oracle = Vec::with_capacity((w * h * 3) as usize);
        let mut union = BTreeSet::new();
        for y in 0..h {
            for x in 0..w {
                let b = base.get_pixel(x, y)[0];
                let owner = layout.elements.iter().find(|e| e.bbox.contains_pixel(x, y));
                match owner {
                    Some(e) => {
                        union.insert((x, y));
                        let c = cmap.color(&e.category);
                        oracle.extend(c.iter().map(|&c| ((3 * u32::from(c) + 2 * u32::from(b)) / 5) as u8));
                    }
                    None => oracle.extend([b, b, b]),
                }
            }
        }
        let painted: BTreeSet<(u32, u32)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| {
                let b = base.get_pixel(x, y)[0];
                img.get_pixel(x, y).0 != [b, b, b]
            })
            .collect();
        set_ok += usize::from(painted == union);
        let mut want = format!("P6\n{w} {h}\n255\n").into_bytes();
        want.extend(oracle);
        bytes_ok += usize::from(encode_ppm(&img) == want);
    }
    outcome(
        set_ok == 20 && bytes_ok == 20,
        format!("painted set matches union {set_ok}/20; PPM bytes match oracle {bytes_ok}/20"),
    )
}

#[test]
fn acceptance() {
    let t = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "metric-oracle equivalence", criterion_1()),
        (2, "rule fixtures", criterion_2()),
        (3, "generator-evaluator closure", criterion_3()),
        (4, "preference loss exactness", criterion_4()),
    ];
    let setup = pretrain(1);
    results.push((5, "alignment efficacy", criterion_5(&setup)));
    results.push((6, "ablation parity", criterion_6(&setup)));
    results.push((7, "roundtrips and determinism", criterion_7(&setup)));
    results.push((8, "render exactness", criterion_8()));
    // Written to the raw handle so the summary shows without --nocapture.
    let mut out = std::io::stdout().lock();
    for (n, name, o) in &results {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "criterion {n} {name}: {verdict} ({})", o.detail);
    }
    let _ = writeln!(out, "acceptance finished in {:.1?}", t.elapsed());
    drop(out);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
