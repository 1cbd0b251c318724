//! Fusion algebra on randomized score matrices and feature views.

use floodpass_core::dataset::{FeatureMatrix, MultiViewDataset, ScoreMatrix};
use floodpass_core::fusion::{
    concat_views, double_fuse, early_fuse, late_fuse, majority_vote, predict_fusion, train_fusion, FusionStrategy,
    FusionTag, LateMode,
};
use floodpass_core::multiclass::predict_proba;
use floodpass_core::svm::SvmHyperParams;
use floodpass_core::synthetic::{blobs, BlobConfig};
use floodpass_core::Sequential;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: usize = 200;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("r{i:03}")).collect()
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ScoreMatrix {
    let mut probs = Vec::with_capacity(n * k);
    for _ in 0..n {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        probs.extend(raw.iter().map(|v| v / s));
    }
    let classes = (0..k).map(|c| format!("c{c}")).collect();
    ScoreMatrix::new(ids(n), classes, probs).unwrap()
}

fn random_view(rng: &mut ChaCha8Rng, name: &str, n: usize, dim: usize) -> FeatureMatrix {
    let values = (0..n * dim).map(|_| rng.random_range(-10.0..10.0)).collect();
    FeatureMatrix::new(name, ids(n), dim, values).unwrap()
}

#[test]
fn late_fuse_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..INSTANCES {
        let (n, k, m) = (rng.random_range(1..12), rng.random_range(2..5), rng.random_range(2..6));
        let mut list: Vec<ScoreMatrix> = (0..m).map(|_| random_scores(&mut rng, n, k)).collect();
        let base = late_fuse(&list).unwrap();
        list.shuffle(&mut rng);
        assert_eq!(late_fuse(&list).unwrap(), base);
    }
}

#[test]
fn late_fuse_matches_per_cell_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..INSTANCES {
        let (n, k) = (rng.random_range(1..10), rng.random_range(2..5));
        let list: Vec<ScoreMatrix> = (0..4).map(|_| random_scores(&mut rng, n, k)).collect();
        let fused = late_fuse(&list).unwrap();
        for i in 0..n {
            for c in 0..k {
                let mean = list.iter().map(|s| s.row(i)[c]).sum::<f64>() / 4.0;
                assert!((fused.row(i)[c] - mean).abs() <= 1e-15);
            }
            assert!((fused.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn double_fuse_is_late_fuse_of_the_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..INSTANCES {
        let (n, k) = (rng.random_range(1..12), rng.random_range(2..5));
        let (a, b) = (random_scores(&mut rng, n, k), random_scores(&mut rng, n, k));
        assert_eq!(double_fuse(&a, &b).unwrap(), late_fuse(&[a.clone(), b.clone()]).unwrap());
        assert_eq!(double_fuse(&a, &b).unwrap(), double_fuse(&b, &a).unwrap());
    }
}

#[test]
fn early_fuse_adds_dims_and_keeps_block_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..INSTANCES {
        let n = rng.random_range(1..8);
        let dims: Vec<usize> = (0..rng.random_range(1..5)).map(|_| rng.random_range(1..9)).collect();
        let views: Vec<FeatureMatrix> =
            dims.iter().enumerate().map(|(v, d)| random_view(&mut rng, &format!("v{v}"), n, *d)).collect();
        let fused = early_fuse(&views).unwrap();
        assert_eq!(fused.dim(), dims.iter().sum::<usize>());
        for i in 0..n {
            let mut off = 0;
            for v in &views {
                let orig = v.row(i);
                let block = &fused.row(i)[off..off + v.dim()];
                off += v.dim();
                let dot: f64 = orig.iter().zip(block).map(|(a, b)| a * b).sum();
                let na = orig.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nb = block.iter().map(|b| b * b).sum::<f64>().sqrt();
                assert!((dot / (na * nb) - 1.0).abs() <= 1e-12);
                assert!((nb - 1.0).abs() <= 1e-12);
                // de-concatenate and rescale: the original comes back
                for (a, b) in orig.iter().zip(block) {
                    assert!((b * na - a).abs() <= 1e-12 * na.max(1.0));
                }
            }
        }
    }
}

#[test]
fn zero_blocks_stay_zero_and_raw_mode_concatenates() {
    let zero = FeatureMatrix::new("z", ids(2), 3, vec![0.0; 6]).unwrap();
    let other = FeatureMatrix::new("o", ids(2), 2, vec![3.0, 4.0, 0.0, 2.0]).unwrap();
    let fused = early_fuse(&[zero.clone(), other.clone()]).unwrap();
    assert_eq!(fused.row(0), &[0.0, 0.0, 0.0, 0.6, 0.8]);
    let raw = concat_views(&[zero, other], false).unwrap();
    assert_eq!(raw.row(1), &[0.0, 0.0, 0.0, 0.0, 2.0]);
}

#[test]
fn argmax_survives_uniform_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..INSTANCES {
        let (n, k) = (rng.random_range(1..10), rng.random_range(2..5));
        let list: Vec<ScoreMatrix> = (0..3).map(|_| random_scores(&mut rng, n, k)).collect();
        let base = late_fuse(&list).unwrap();
        let scale = rng.random_range(0.1..10.0);
        // scale every row by the same positive factor, then renormalize
        let rescaled: Vec<ScoreMatrix> = list
            .iter()
            .map(|s| {
                let probs = s
                    .rows()
                    .flat_map(|r| {
                        let scaled: Vec<f64> = r.iter().map(|p| p * scale).collect();
                        let sum: f64 = scaled.iter().sum();
                        scaled.into_iter().map(move |p| p / sum)
                    })
                    .collect();
                ScoreMatrix::new(s.ids().to_vec(), s.classes().to_vec(), probs).unwrap()
            })
            .collect();
        assert_eq!(late_fuse(&rescaled).unwrap().argmax_labels(), base.argmax_labels());
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let a = random_scores(&mut rng, 3, 2);
    let b = random_scores(&mut rng, 4, 2);
    let c = random_scores(&mut rng, 3, 3);
    assert!(late_fuse(&[a.clone(), b]).is_err());
    assert!(late_fuse(&[a, c]).is_err());
    assert!(late_fuse(&[]).is_err());
}

#[test]
fn majority_vote_is_one_hot_and_breaks_ties_low() {
    let classes = vec!["a".to_string(), "b".to_string()];
    let s = |p: f64| ScoreMatrix::new(vec!["x".into()], classes.clone(), vec![p, 1.0 - p]).unwrap();
    let (out, ties) = majority_vote(&[s(0.9), s(0.2), s(0.3)]).unwrap();
    assert_eq!(out.row(0), &[0.0, 1.0]);
    assert!(ties.is_empty());
    let (out, ties) = majority_vote(&[s(0.9), s(0.2)]).unwrap();
    assert_eq!(out.row(0), &[1.0, 0.0]);
    assert_eq!(ties, vec!["x".to_string()]);
}

fn fixture() -> MultiViewDataset {
    let f = blobs(&BlobConfig { samples: 90, seed: 4, ..BlobConfig::default() });
    MultiViewDataset::new(f.views, &f.outcomes).unwrap()
}

#[test]
fn trained_components_match_strategy() {
    let d = fixture();
    let hp = SvmHyperParams::default();
    let early = train_fusion(&d, FusionStrategy::new(FusionTag::Early), &hp, &Sequential).unwrap();
    assert!(early.early_model.is_some() && early.per_view_models.is_empty());
    let late = train_fusion(&d, FusionStrategy::new(FusionTag::Late), &hp, &Sequential).unwrap();
    assert!(late.early_model.is_none() && late.per_view_models.len() == 4);
    let double = train_fusion(&d, FusionStrategy::new(FusionTag::Double), &hp, &Sequential).unwrap();
    assert!(double.early_model.is_some() && double.per_view_models.len() == 4);
    for m in [&early, &late, &double] {
        m.validate().unwrap();
        assert_eq!(m.view_dims, vec![16, 16, 12, 8]);
    }
    assert_eq!(early.early_model.as_ref().unwrap().dim, 52);
}

#[test]
fn double_prediction_is_mean_of_components() {
    let d = fixture();
    let hp = SvmHyperParams::default();
    let m = train_fusion(&d, FusionStrategy::new(FusionTag::Double), &hp, &Sequential).unwrap();
    let out = predict_fusion(&m, d.views(), &Sequential).unwrap();
    let early = predict_proba(m.early_model.as_ref().unwrap(), &early_fuse(d.views()).unwrap()).unwrap();
    let per_view: Vec<ScoreMatrix> =
        m.per_view_models.iter().zip(d.views()).map(|(pm, v)| predict_proba(pm, v).unwrap()).collect();
    for i in 0..d.len() {
        for c in 0..3 {
            let late = per_view.iter().map(|s| s.row(i)[c]).sum::<f64>() / 4.0;
            let expected = (early.row(i)[c] + late) / 2.0;
            assert!((out.row(i)[c] - expected).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_view_late_equals_its_model() {
    let f = blobs(&BlobConfig { samples: 60, view_dims: vec![5], seed: 9, ..BlobConfig::default() });
    let d = MultiViewDataset::new(f.views, &f.outcomes).unwrap();
    let m = train_fusion(&d, FusionStrategy::new(FusionTag::Late), &SvmHyperParams::default(), &Sequential).unwrap();
    let direct = predict_proba(&m.per_view_models[0], &d.views()[0]).unwrap();
    assert_eq!(predict_fusion(&m, d.views(), &Sequential).unwrap(), direct);
}

#[test]
fn vote_mode_and_view_checks() {
    let d = fixture();
    let strategy = FusionStrategy { late_mode: LateMode::MajorityVote, ..FusionStrategy::new(FusionTag::Late) };
    let m = train_fusion(&d, strategy, &SvmHyperParams::default(), &Sequential).unwrap();
    let out = predict_fusion(&m, d.views(), &Sequential).unwrap();
    for row in out.rows() {
        assert_eq!(row.iter().filter(|p| **p == 1.0).count(), 1);
    }
    assert!(predict_fusion(&m, &d.views()[..3], &Sequential).is_err());
    let renamed: Vec<FeatureMatrix> = d.views().iter().map(|v| v.clone().with_view_name("other")).collect();
    assert!(predict_fusion(&m, &renamed, &Sequential).is_err());
}
