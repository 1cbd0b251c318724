//! Acceptance suite: one PASS/FAIL line per criterion, each with its
//! tolerance and time budget. Exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use floodpass_core::cascade::{CascadeOutcome, NON_PASSABLE, NO_EVIDENCE, PASSABLE};
use floodpass_core::dataset::{split_dataset, FeatureMatrix, LabelTable, PatchSpec, Point, ScoreMatrix};
use floodpass_core::format::{
    parse_fvec, parse_labels, parse_patches, parse_scores, write_fvec, write_labels, write_patches, write_scores,
};
use floodpass_core::fusion::{double_fuse, early_fuse, late_fuse, predict_fusion, train_fusion};
use floodpass_core::image::{load_ppm, write_ppm, ImageBuffer};
use floodpass_core::metrics::{confusion_over, f1, mean_f1, CASCADE_LABELS};
use floodpass_core::num;
use floodpass_core::patch::classify_patch;
use floodpass_core::protocol::{run_protocol, Featurizer, Protocol, ProtocolConfig};
use floodpass_core::svm::{svm_objective, svm_subgradient, train_binary_svm, SvmHyperParams};
use floodpass_core::synthetic::{blobs, patches, svm_toy, BlobConfig};
use floodpass_core::{
    predict_cascade, train_cascade, CascadeModel, FusionStrategy, FusionTag, MultiViewDataset, Sequential,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

fn rng(stream: u64) -> ChaCha8Rng {
    num::rng(2018, stream)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- SVM

fn grid_optimum(x: &[f64], y: &[f64], lambda: f64) -> f64 {
    let grid: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
    let mut best = f64::INFINITY;
    let mut proj = vec![0.0; y.len()];
    for &w1 in &grid {
        for &w2 in &grid {
            for (i, p) in proj.iter_mut().enumerate() {
                *p = w1 * x[2 * i] + w2 * x[2 * i + 1];
            }
            let penalty = lambda / 2.0 * (w1 * w1 + w2 * w2);
            for &b in &grid {
                let hinge: f64 = proj.iter().zip(y).map(|(p, yi)| f64::max(0.0, 1.0 - yi * (p + b))).sum();
                best = best.min(penalty + hinge / y.len() as f64);
            }
        }
    }
    best
}

fn svm_optimizer() -> Check {
    let (x, y) = svm_toy();
    let hp = SvmHyperParams::default();
    let oracle = grid_optimum(&x, &y, hp.lambda);
    let m = train_binary_svm(&x, 2, &y, &hp).map_err(|e| e.to_string())?;
    let obj = svm_objective(&m.w, m.b, &x, 2, &y, hp.lambda);
    let gap = (obj - oracle).abs();
    ensure(gap <= 1e-2, || format!("objective {obj} vs grid {oracle}"))?;

    let mut r = rng(1);
    let h = 1e-5;
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let (n, dim) = (r.random_range(2..15), r.random_range(1..6));
        let x: Vec<f64> = (0..n * dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let w: Vec<f64> = (0..dim).map(|_| r.random_range(-1.5..1.5)).collect();
        let b = r.random_range(-1.0..1.0);
        let lambda = r.random_range(0.01..1.0);
        let kink = x.chunks_exact(dim).zip(&y).any(|(xi, yi)| {
            let s: f64 = xi.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
            (yi * s - 1.0).abs() < 1e-3
        });
        if kink {
            continue;
        }
        let (gw, gb) = svm_subgradient(&w, b, &x, dim, &y, lambda);
        let f = |w: &[f64], b: f64| svm_objective(w, b, &x, dim, &y, lambda);
        let mut pairs = Vec::new();
        for j in 0..dim {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            pairs.push((gw[j], (f(&wp, b) - f(&wm, b)) / (2.0 * h)));
        }
        pairs.push((gb, (f(&w, b + h) - f(&w, b - h)) / (2.0 * h)));
        for (a, fd) in pairs {
            worst = worst.max((a - fd).abs() / fd.abs().max(1.0));
        }
        checked += 1;
    }
    ensure(worst <= 1e-4, || format!("finite-difference rel err {worst:.2e}"))?;
    Ok(format!("objective gap {gap:.2e} <= 1e-2; subgradient rel err {worst:.2e} <= 1e-4 on 100 instances"))
}

// ---------------------------------------------------------------- fusion

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("r{i:03}")).collect()
}

fn random_scores(r: &mut ChaCha8Rng, n: usize, k: usize) -> ScoreMatrix {
    let mut probs = Vec::with_capacity(n * k);
    for _ in 0..n {
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        probs.extend(raw.iter().map(|v| v / s));
    }
    ScoreMatrix::new(ids(n), (0..k).map(|c| format!("c{c}")).collect(), probs).unwrap()
}

fn fusion_algebra() -> Check {
    let mut r = rng(2);
    let mut worst_cos = 0.0f64;
    for i in 0..200 {
        let (n, k, m) = (r.random_range(1..12), r.random_range(2..5), r.random_range(2..6));
        let mut list: Vec<ScoreMatrix> = (0..m).map(|_| random_scores(&mut r, n, k)).collect();
        let base = late_fuse(&list).map_err(|e| e.to_string())?;
        list.shuffle(&mut r);
        ensure(late_fuse(&list).unwrap() == base, || format!("instance {i}: late_fuse changed under permutation"))?;
        ensure(double_fuse(&list[0], &list[1]).unwrap() == late_fuse(&list[..2]).unwrap(), || {
            format!("instance {i}: double_fuse differs from late_fuse of the pair")
        })?;

        let dims: Vec<usize> = (0..r.random_range(1..5)).map(|_| r.random_range(1..9)).collect();
        let views: Vec<FeatureMatrix> = dims
            .iter()
            .enumerate()
            .map(|(v, d)| {
                let values = (0..n * d).map(|_| r.random_range(-10.0..10.0)).collect();
                FeatureMatrix::new(format!("v{v}"), ids(n), *d, values).unwrap()
            })
            .collect();
        let fused = early_fuse(&views).map_err(|e| e.to_string())?;
        ensure(fused.dim() == dims.iter().sum::<usize>(), || format!("instance {i}: dim {} not additive", fused.dim()))?;
        for row in 0..n {
            let mut off = 0;
            for v in &views {
                let (a, b) = (v.row(row), &fused.row(row)[off..off + v.dim()]);
                off += v.dim();
                let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                let cos = dot / (num::norm(a) * num::norm(b));
                worst_cos = worst_cos.max((cos - 1.0).abs());
            }
        }
    }
    ensure(worst_cos <= 1e-12, || format!("block cosine deviates by {worst_cos:.2e}"))?;
    Ok(format!("200 instances: permutation and pair identities exact; dims additive; |cos-1| max {worst_cos:.1e} <= 1e-12"))
}

// ---------------------------------------------------------------- metrics

fn metric_oracle() -> Check {
    let mut r = rng(3);
    let mut degenerate = 0;
    for i in 0..1000 {
        let n = r.random_range(1..=30);
        let draw = |r: &mut ChaCha8Rng| {
            let allowed: Vec<&str> = loop {
                let a: Vec<&str> = CASCADE_LABELS.iter().copied().filter(|_| r.random_bool(0.6)).collect();
                if !a.is_empty() {
                    break a;
                }
            };
            (0..n).map(|_| allowed[r.random_range(0..allowed.len())]).collect::<Vec<_>>()
        };
        let pred = draw(&mut r);
        let truth = draw(&mut r);
        let c = confusion_over(&pred, &truth, &CASCADE_LABELS).map_err(|e| e.to_string())?;
        let oracle = |positive: &str| {
            let (mut tp, mut fp, mut fn_) = (0u32, 0u32, 0u32);
            for (p, t) in pred.iter().zip(&truth) {
                match (*p == positive, *t == positive) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let zero = precision + recall == 0.0;
            (if zero { 0.0 } else { tp as f64 / (tp as f64 + (fp + fn_) as f64 / 2.0) }, tp + fp == 0 || tp + fn_ == 0)
        };
        for l in CASCADE_LABELS {
            let (expected, degen) = oracle(l);
            degenerate += usize::from(degen);
            let got = f1(&c, l).map_err(|e| e.to_string())?;
            ensure(got == expected, || format!("set {i}: f1({l}) {got} vs oracle {expected}"))?;
        }
        let expected = (oracle(PASSABLE).0 + oracle(NON_PASSABLE).0) / 2.0;
        let got = mean_f1(&pred, &truth).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("set {i}: mean_f1 {got} vs oracle {expected}"))?;
    }
    Ok(format!("1000 sets exact, {degenerate} zero-denominator cases covered"))
}

// ---------------------------------------------------------------- cascade

fn cascade_contract() -> Check {
    let f = blobs(&BlobConfig { samples: 500, noise: 4.0, seed: 21, ..BlobConfig::default() });
    let d = MultiViewDataset::new(f.views.clone(), &f.evidence).map_err(|e| e.to_string())?;
    let hp = SvmHyperParams::default();
    let m = train_cascade(&d, &f.passability, FusionStrategy::new(FusionTag::Double), &hp, &Sequential)
        .map_err(|e| e.to_string())?;
    let out = predict_cascade(&m, d.views(), &Sequential).map_err(|e| e.to_string())?;
    let p1 = predict_fusion(&m.stage1, d.views(), &Sequential).unwrap().column("evidence").unwrap();
    let p2 = predict_fusion(&m.stage2, d.views(), &Sequential).unwrap().column(PASSABLE).unwrap();
    for (i, l) in out.iter().enumerate() {
        let expected = if p1[i] < m.threshold1 {
            NO_EVIDENCE
        } else if p2[i] >= m.threshold2 {
            PASSABLE
        } else {
            NON_PASSABLE
        };
        let same_probs = l.stage1_proba == p1[i] && l.stage2_proba == (expected != NO_EVIDENCE).then_some(p2[i]);
        ensure(l.value.as_str() == expected && same_probs, || format!("sample {}: composition differs", l.id))?;
    }

    let inverted: LabelTable = f
        .passability
        .iter()
        .map(|(id, l)| (id.to_string(), if l == PASSABLE { NON_PASSABLE } else { PASSABLE }.to_string()))
        .collect();
    let inv = train_cascade(&d, &inverted, m.strategy(), &hp, &Sequential).map_err(|e| e.to_string())?;
    let swapped = CascadeModel { stage2: inv.stage2, ..m.clone() };
    let alt = predict_cascade(&swapped, d.views(), &Sequential).unwrap();
    let negatives = out.iter().filter(|l| l.value == CascadeOutcome::NoEvidence).count();
    for (a, b) in out.iter().zip(&alt) {
        if a.value == CascadeOutcome::NoEvidence {
            ensure(a == b, || format!("sample {}: stage-1 negative changed with stage 2", a.id))?;
        }
    }

    let mut prev: Option<Vec<bool>> = None;
    for t in [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95] {
        let mm = m.clone().with_thresholds(t, 0.5).unwrap();
        let neg: Vec<bool> =
            predict_cascade(&mm, d.views(), &Sequential).unwrap().iter().map(|l| l.value == CascadeOutcome::NoEvidence).collect();
        if let Some(p) = &prev {
            ensure(p.iter().zip(&neg).all(|(was, now)| !*was || *now), || format!("threshold1 {t} revived a negative"))?;
        }
        prev = Some(neg);
    }
    Ok(format!("500 samples: composition exact, {negatives} short-circuited samples unchanged, threshold1 monotone"))
}

// ---------------------------------------------------------------- FCSM

fn synthetic_fcsm() -> Check {
    let f = blobs(&BlobConfig::default());
    let full = MultiViewDataset::new(f.views.clone(), &f.outcomes).map_err(|e| e.to_string())?;
    let split = split_dataset(&full, 0.6, 0).map_err(|e| e.to_string())?;
    let hp = SvmHyperParams::default();
    let truth = split.test.label_column();
    let mut parts = Vec::new();
    for tag in [FusionTag::Early, FusionTag::Late, FusionTag::Double] {
        let m = train_fusion(&split.train, FusionStrategy::new(tag), &hp, &Sequential).map_err(|e| e.to_string())?;
        let s = predict_fusion(&m, split.test.views(), &Sequential).map_err(|e| e.to_string())?;
        let hits = s.argmax_labels().iter().zip(&truth).filter(|(p, t)| p == t).count();
        let acc = hits as f64 / truth.len() as f64;
        ensure(acc >= 0.95, || format!("{tag} held-out accuracy {acc:.4} < 0.95"))?;
        parts.push(format!("{tag} {:.2}%", acc * 100.0));
    }
    let train = split.train.relabel(&f.evidence).map_err(|e| e.to_string())?;
    let m = train_cascade(&train, &f.passability, FusionStrategy::new(FusionTag::Double), &hp, &Sequential)
        .map_err(|e| e.to_string())?;
    let out = predict_cascade(&m, split.test.views(), &Sequential).map_err(|e| e.to_string())?;
    let pred: Vec<&str> = out.iter().map(|l| l.value.as_str()).collect();
    let mf1 = mean_f1(&pred, &truth).map_err(|e| e.to_string())?;
    ensure(mf1 >= 0.90, || format!("cascade mean F1 {mf1:.4} < 0.90"))?;
    Ok(format!("held-out {} >= 95%; cascade mean F1 {:.4} >= 0.90", parts.join(", "), mf1))
}

// ---------------------------------------------------------------- FDSI

fn synthetic_fdsi() -> Check {
    let hist = Featurizer::Histogram { bins: 16 };
    let f = patches(40, 0);
    let cfg = ProtocolConfig { protocol: Protocol::HalfTrain, seed: 0, ..ProtocolConfig::default() };
    let half = run_protocol(&f.patches, None, &f.images, &hist, &cfg, &Sequential).map_err(|e| e.to_string())?;
    let half_f1 = half.report.f1_per_class[NON_PASSABLE];
    ensure(half_f1 >= 0.95, || format!("half-train non_passable F1 {half_f1} < 0.95"))?;

    let cfg = ProtocolConfig { protocol: Protocol::AllTrain, ..cfg };
    let all = run_protocol(&f.patches, None, &f.images, &hist, &cfg, &Sequential).map_err(|e| e.to_string())?;
    let all_f1 = all.report.f1_per_class[NON_PASSABLE].min(all.report.f1_per_class[PASSABLE]);
    ensure(all_f1 == 1.0, || format!("all-train F1 {all_f1} != 1.0"))?;
    ensure(all.train_samples == 80 * cfg.augment.multiplier(), || "all-train skipped samples".into())?;

    // ties: direct decisions and through the protocol with constant scores
    let mut r = rng(6);
    let mut ties = 0;
    for _ in 0..1000 {
        let p: f64 = r.random();
        ensure(classify_patch(p, p) == NON_PASSABLE, || format!("tie at {p} not non_passable"))?;
        ties += 1;
    }
    let mut ids: Vec<String> = f.patches.iter().map(|p| p.image_id.clone()).collect();
    ids.sort();
    let flat = ScoreMatrix::new(ids.clone(), vec![NON_PASSABLE.into(), PASSABLE.into()], vec![0.5; ids.len() * 2]).unwrap();
    let tied = run_protocol(&f.patches, None, &f.images, &Featurizer::Scores(flat), &cfg, &Sequential)
        .map_err(|e| e.to_string())?;
    ensure(tied.predictions.iter().all(|(_, l)| *l == NON_PASSABLE), || "protocol tie not non_passable".into())?;
    ties += tied.predictions.len();
    Ok(format!("half-train non_passable F1 {half_f1:.4} >= 0.95; all-train F1 {all_f1} = 1.0; {ties}/{ties} ties non_passable"))
}

// ---------------------------------------------------------------- formats

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-7 * a.abs().max(b.abs())
}

fn format_roundtrips(bin: &Path) -> Check {
    let mut r = rng(7);
    for i in 0..100 {
        let (n, dim) = (r.random_range(0..20), r.random_range(1..40));
        let values: Vec<f64> = (0..n * dim).map(|_| r.random_range(-1.0..1.0) * 10f64.powi(r.random_range(-30..30))).collect();
        let m = FeatureMatrix::new("view", ids(n), dim, values).unwrap();
        let back = parse_fvec(&write_fvec(&m)).map_err(|e| e.to_string())?;
        let ok = back.ids() == m.ids() && back.dim() == dim && back.values().iter().zip(m.values()).all(|(a, b)| close(*a, *b));
        ensure(ok, || format!("FVEC corpus {i} differs after round trip"))?;

        let labels: LabelTable = ids(n).into_iter().map(|id| (id, CASCADE_LABELS[r.random_range(0..3)])).collect();
        ensure(parse_labels(&write_labels(&labels)).map_err(|e| e.to_string())? == labels, || format!("LABELS corpus {i}"))?;

        let k = r.random_range(2..5);
        let s = random_scores(&mut r, n.max(1), k);
        let back = parse_scores(&write_scores(&s)).map_err(|e| e.to_string())?;
        let ok = back.ids() == s.ids() && back.classes() == s.classes() && back.probs().iter().zip(s.probs()).all(|(a, b)| close(*a, *b));
        ensure(ok, || format!("SCORE corpus {i} differs after round trip"))?;

        let specs: Vec<PatchSpec> = ids(n)
            .into_iter()
            .map(|id| PatchSpec {
                image_id: id,
                p1: Point::new(r.random(), r.random()),
                p2: Point::new(r.random(), r.random()),
                label: [None, Some(PASSABLE.to_string()), Some(NON_PASSABLE.to_string())][r.random_range(0..3)].clone(),
            })
            .collect();
        ensure(parse_patches(&write_patches(&specs)).map_err(|e| e.to_string())? == specs, || format!("PATCHES corpus {i}"))?;

        let (w, h) = (r.random_range(1..40), r.random_range(1..40));
        let img = ImageBuffer::new(w, h, (0..w * h * 3).map(|_| r.random()).collect()).unwrap();
        let bytes = write_ppm(&img);
        let back = load_ppm(&bytes).map_err(|e| e.to_string())?;
        ensure(back == img && write_ppm(&back) == bytes, || format!("PPM corpus {i} not byte-exact"))?;
    }
    let runs = cli_outputs(bin, 1)?;
    let again = cli_outputs(bin, 4)?;
    ensure(runs == again, || {
        let differing: Vec<&String> = runs.iter().filter(|(k, v)| again.get(*k) != Some(v)).map(|(k, _)| k).collect();
        format!("CLI outputs differ between runs: {differing:?}")
    })?;
    Ok(format!("100 corpora per format within 1e-7 rel, PPM byte-exact; {} CLI artifacts byte-identical across runs", runs.len()))
}

/// Runs the full CLI pipeline in a fresh directory and collects every file
/// written, keyed by relative path.
fn cli_outputs(bin: &Path, jobs: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin)
            .args(args)
            .env("FLOODPASS_JOBS", jobs.to_string())
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("`floodpass {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))?;
        std::fs::write(dir.path().join(format!("stdout.{}", args[0])), out.stdout).map_err(|e| e.to_string())
    };
    let views = ["--features", "b/m1.fvec", "b/m2.fvec", "b/m3.fvec", "b/m4.fvec"];
    run(&["generate", "blobs", "--samples", "200", "--seed", "3", "--out-dir", "b"])?;
    run(&["generate", "patches", "--per-class", "12", "--seed", "3", "--out-dir", "p"])?;
    run(&[&["split"][..], &views, &["--labels", "b/outcomes.labels", "--seed", "5", "--out-dir", "s"]].concat())?;
    run(&[&["train"][..], &views, &["--labels", "s/train.labels", "--cascade", "--strategy", "double", "--seed", "5", "--out", "c.model"]].concat())?;
    run(&[&["predict"][..], &views, &["--model", "c.model", "--out", "c.pred"]].concat())?;
    run(&["evaluate", "--predictions", "c.pred", "--truth", "s/test.labels", "--out", "c.report"])?;
    run(&["run-fdsi", "--patches", "p/patches.txt", "--images", "p/images", "--protocol", "half-train", "--seed", "7", "--out", "f.report", "--predictions-out", "f.pred"])?;
    run(&["featurize", "--patches", "p/patches.txt", "--images", "p/images", "--out", "p.fvec"])?;
    run(&["augment", "--patches", "p/patches.txt", "--images", "p/images", "--seed", "2", "--out-dir", "aug"])?;
    run(&["extract-patches", "--patches", "p/patches.txt", "--images", "p/images", "--out-dir", "crops"])?;
    let mut out = BTreeMap::new();
    collect(dir.path(), dir.path(), &mut out)?;
    Ok(out)
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> Result<(), String> {
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else {
            let key = path.strip_prefix(root).unwrap().display().to_string();
            out.insert(key, std::fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- runner

fn main() {
    let bin = Path::new(env!("CARGO_BIN_EXE_floodpass"));
    let criteria: Vec<Criterion> = vec![
        ("svm optimizer correctness", Duration::from_secs(10), Box::new(svm_optimizer)),
        ("fusion algebra", Duration::from_secs(5), Box::new(fusion_algebra)),
        ("metric oracle equivalence", Duration::from_secs(5), Box::new(metric_oracle)),
        ("cascade contract", Duration::from_secs(60), Box::new(cascade_contract)),
        ("synthetic fcsm benchmark", Duration::from_secs(60), Box::new(synthetic_fcsm)),
        ("synthetic fdsi benchmark", Duration::from_secs(30), Box::new(synthetic_fdsi)),
        ("format round-trips and cli reproducibility", Duration::from_secs(60), Box::new(move || format_roundtrips(bin))),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (name, budget, check) in &criteria {
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {:.1}s > {}s", elapsed.as_secs_f64(), budget.as_secs())),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2}s < {}s]", elapsed.as_secs_f64(), budget.as_secs()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{:.2}s]", elapsed.as_secs_f64());
            }
        }
    }
    let elapsed = total.elapsed();
    if elapsed > Duration::from_secs(180) {
        failed += 1;
        println!("FAIL  total runtime: {:.1}s > 180s", elapsed.as_secs_f64());
    } else {
        println!("PASS  total runtime: {:.1}s < 180s", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() + 1 - failed, criteria.len() + 1);
    if failed > 0 {
        std::process::exit(1);
    }
}
