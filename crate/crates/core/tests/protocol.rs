//! Satellite patch protocols on the synthetic dark/bright fixture.

use floodpass_core::dataset::ScoreMatrix;
use floodpass_core::patch::AugmentPolicy;
use floodpass_core::protocol::{run_protocol, Featurizer, Protocol, ProtocolConfig};
use floodpass_core::synthetic::patches;
use floodpass_core::Sequential;

fn cfg(protocol: Protocol, seed: u64) -> ProtocolConfig {
    ProtocolConfig { protocol, seed, ..ProtocolConfig::default() }
}

const HIST: Featurizer = Featurizer::Histogram { bins: 16 };

#[test]
fn half_train_separates_dark_from_bright() {
    let f = patches(40, 0);
    let run = run_protocol(&f.patches, None, &f.images, &HIST, &cfg(Protocol::HalfTrain, 7), &Sequential).unwrap();
    assert!(run.report.f1_per_class["non_passable"] >= 0.95);
    assert_eq!(run.train_patches, 40);
    assert_eq!(run.report.samples, 40);
    assert_eq!(run.report.metadata["protocol"], "half_train");
    assert_eq!(run.report.metadata["split_seed"], "7");
}

#[test]
fn half_train_is_deterministic() {
    let f = patches(20, 3);
    let c = cfg(Protocol::HalfTrain, 11);
    let a = run_protocol(&f.patches, None, &f.images, &HIST, &c, &Sequential).unwrap();
    let b = run_protocol(&f.patches, None, &f.images, &HIST, &c, &Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.report.render_text(), b.report.render_text());
}

#[test]
fn all_train_uses_every_labeled_patch() {
    let f = patches(15, 1);
    let c = cfg(Protocol::AllTrain, 0);
    let run = run_protocol(&f.patches, None, &f.images, &HIST, &c, &Sequential).unwrap();
    assert_eq!(run.train_patches, 30);
    assert_eq!(run.train_samples, 30 * c.augment.multiplier());
    assert_eq!(run.report.f1_per_class["non_passable"], 1.0);
    assert_eq!(run.report.f1_per_class["passable"], 1.0);

    let none = ProtocolConfig { augment: AugmentPolicy::none(), ..c };
    let run = run_protocol(&f.patches, None, &f.images, &HIST, &none, &Sequential).unwrap();
    assert_eq!(run.train_samples, 30);
    assert_eq!(run.report.metadata["augment_flips"], "-");
}

#[test]
fn all_train_with_designated_test_list() {
    let train = patches(12, 2);
    let mut test = patches(6, 9);
    // unlabeled test patches are predicted but not scored
    test.patches[0].label = None;
    let mut images = train.images.clone();
    let renamed: Vec<_> = test
        .patches
        .iter()
        .map(|p| {
            let id = format!("t{}", p.image_id);
            images.insert(id.clone(), test.images[&p.image_id].clone());
            floodpass_core::PatchSpec { image_id: id, ..p.clone() }
        })
        .collect();
    let run = run_protocol(&train.patches, Some(&renamed), &images, &HIST, &cfg(Protocol::AllTrain, 0), &Sequential)
        .unwrap();
    assert_eq!(run.predictions.len(), 12);
    assert_eq!(run.report.samples, 11);
}

#[test]
fn external_scores_and_the_tie_rule() {
    let f = patches(4, 5);
    let ids: Vec<String> = f.patches.iter().map(|p| p.image_id.clone()).collect();
    let mut ids_sorted = ids.clone();
    ids_sorted.sort();
    // every row is an exact tie
    let probs = vec![0.5; ids_sorted.len() * 2];
    let scores = ScoreMatrix::new(ids_sorted, vec!["non_passable".into(), "passable".into()], probs).unwrap();
    let run = run_protocol(&f.patches, None, &f.images, &Featurizer::Scores(scores), &cfg(Protocol::AllTrain, 0), &Sequential)
        .unwrap();
    assert_eq!(run.predictions.len(), 8);
    assert!(run.predictions.iter().all(|(_, l)| *l == "non_passable"));
    assert_eq!(run.train_samples, 0);
    assert_eq!(run.report.metadata["featurizer"], "external_scores");
}

#[test]
fn too_few_samples_per_class() {
    let mut f = patches(2, 0);
    let first_passable = f.patches.iter().position(|p| p.label.as_deref() == Some("passable")).unwrap();
    f.patches[first_passable].label = None;
    assert!(run_protocol(&f.patches, None, &f.images, &HIST, &cfg(Protocol::HalfTrain, 0), &Sequential).is_err());
}
