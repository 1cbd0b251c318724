//! One-vs-rest composition of calibrated binary SVMs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{FeatureMatrix, LabelTable, ScoreMatrix};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::num;
use crate::platt::fit_platt;
use crate::svm::{train_binary_svm_seeded, BinarySvm, SvmHyperParams};

/// Folds used for out-of-fold calibration data.
pub const CALIBRATION_FOLDS: usize = 5;
/// Floor on the per-dimension scale.
pub const MIN_SCALE: f64 = 1e-12;
const FOLD_STREAM: u64 = 0xf01d;

/// Per-dimension affine map to zero mean and unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation of `x`, scale floored at
    /// [`MIN_SCALE`].
    pub fn fit(x: &[f64], dim: usize) -> Self {
        let n = (x.len() / dim) as f64;
        let mut mean = vec![0.0; dim];
        for row in x.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in x.chunks_exact(dim) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var.iter().map(|s| libm::sqrt(s / n).max(MIN_SCALE)).collect();
        Self { mean, scale }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.mean.len();
        let mut out = vec![0.0; x.len()];
        for (src, dst) in x.chunks_exact(dim).zip(out.chunks_exact_mut(dim)) {
            self.apply_row(src, dst);
        }
        out
    }
}

/// One calibrated [`BinarySvm`] per class, trained on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub classes: Vec<String>,
    pub svms: Vec<BinarySvm>,
    pub dim: usize,
    pub standardization: Standardization,
    pub hyper_params: SvmHyperParams,
}

impl MulticlassModel {
    /// Checks the structural invariants (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(alloc::format!("model: {m}")));
        if self.classes.len() < 2 || self.classes.len() != self.svms.len() {
            return bad("need one binary SVM per class and at least two classes");
        }
        if self.svms.iter().any(|s| s.w.len() != self.dim) {
            return bad("weight vector length differs from dim");
        }
        let st = &self.standardization;
        if st.mean.len() != self.dim || st.scale.len() != self.dim {
            return bad("standardization length differs from dim");
        }
        if st.scale.iter().any(|s| s.is_nan() || *s <= 0.0) {
            return bad("scale entries must be positive");
        }
        Ok(())
    }

    /// Classes whose calibration fell back to the default sigmoid.
    pub fn calibration_fallbacks(&self) -> Vec<&str> {
        self.classes
            .iter()
            .zip(&self.svms)
            .filter(|(_, s)| s.calibration_fallback)
            .map(|(c, _)| c.as_str())
            .collect()
    }
}

/// Assigns each sample to one of `folds` folds, stratified by label: within
/// each label (sorted order) samples are shuffled and dealt round-robin,
/// continuing the deal across labels.
fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = num::rng(seed, FOLD_STREAM);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|i| labels[*i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % folds;
            next += 1;
        }
    }
    fold_of
}

/// Trains a one-vs-rest model on one view.
///
/// Samples are put in id order first, so the result does not depend on row
/// order. Features are standardized; for every class an SVM is fitted on each
/// of the calibration folds' complements, the sigmoid is fitted to the pooled
/// out-of-fold decision values, and the final SVM is refit on all samples.
pub fn train_ovr<E: Executor>(
    view: &FeatureMatrix,
    labels: &LabelTable,
    hp: &SvmHyperParams,
    exec: &E,
) -> Result<MulticlassModel> {
    hp.validate()?;
    let mut order: Vec<usize> = (0..view.len()).collect();
    order.sort_by(|a, b| view.ids()[*a].cmp(&view.ids()[*b]));
    let view = view.select(&order);

    let mut row_labels = Vec::with_capacity(view.len());
    for id in view.ids() {
        let l = labels
            .get(id)
            .ok_or_else(|| Error::NotAligned(alloc::format!("id `{id}` has no label")))?;
        row_labels.push(l);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &row_labels {
        *counts.entry(l).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(Error::SingleClassData);
    }
    if let Some((class, n)) = counts.iter().find(|(_, n)| **n < 2) {
        return Err(Error::TooFewSamples { class: (*class).into(), found: *n, required: 2 });
    }
    let classes: Vec<String> = counts.keys().map(|c| String::from(*c)).collect();
    let class_of: Vec<usize> = row_labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("known class"))
        .collect();

    let dim = view.dim();
    let standardization = Standardization::fit(view.values(), dim);
    let x = standardization.apply(view.values());
    let n = view.len();
    let folds = CALIBRATION_FOLDS.min(n);
    let fold_of = stratified_folds(&class_of, classes.len(), folds, hp.seed);

    // Job (class, None) refits on everything; (class, Some(f)) holds out fold f.
    let jobs: Vec<(usize, Option<usize>)> = (0..classes.len())
        .flat_map(|k| core::iter::once((k, None)).chain((0..folds).map(move |f| (k, Some(f)))))
        .collect();
    let x_ref = &x;
    let class_ref = &class_of;
    let fold_ref = &fold_of;
    let results = exec.map(jobs, |(k, fold)| -> Result<(usize, Option<usize>, BinarySvm)> {
        let keep: Vec<usize> = (0..n).filter(|i| Some(fold_ref[*i]) != fold).collect();
        let mut xs = Vec::with_capacity(keep.len() * dim);
        let mut ys = Vec::with_capacity(keep.len());
        for &i in &keep {
            xs.extend_from_slice(&x_ref[i * dim..(i + 1) * dim]);
            ys.push(if class_ref[i] == k { 1.0 } else { -1.0 });
        }
        let stream = num::mix(&[k as u64, fold.map_or(0, |f| f as u64 + 1)]);
        let svm = train_binary_svm_seeded(&xs, dim, &ys, hp, stream)?;
        Ok((k, fold, svm))
    });

    let mut finals: Vec<Option<BinarySvm>> = vec![None; classes.len()];
    let mut oof = vec![vec![0.0; n]; classes.len()];
    for r in results {
        let (k, fold, svm) = r?;
        match fold {
            None => finals[k] = Some(svm),
            Some(f) => {
                for i in (0..n).filter(|i| fold_of[*i] == f) {
                    oof[k][i] = svm.decision(&x[i * dim..(i + 1) * dim]);
                }
            }
        }
    }
    let mut svms = Vec::with_capacity(classes.len());
    for (k, svm) in finals.into_iter().enumerate() {
        let mut svm = svm.expect("final fit present");
        let y: Vec<f64> = class_of.iter().map(|c| if *c == k { 1.0 } else { -1.0 }).collect();
        let cal = fit_platt(&oof[k], &y)?;
        svm.platt_a = cal.a;
        svm.platt_b = cal.b;
        svm.calibration_fallback = cal.degenerate;
        svms.push(svm);
    }
    Ok(MulticlassModel { classes, svms, dim, standardization, hyper_params: *hp })
}

/// Class probabilities per sample: each class's calibrated probability, the
/// row then normalized to sum to 1. Also returns the ids whose calibrated
/// probabilities all underflowed to 0 (those rows are uniform).
pub fn predict_proba_flagged(m: &MulticlassModel, x: &FeatureMatrix) -> Result<(ScoreMatrix, Vec<String>)> {
    if x.dim() != m.dim {
        return Err(Error::FeatureDimMismatch { expected: m.dim, found: x.dim() });
    }
    let k = m.classes.len();
    let mut probs = Vec::with_capacity(x.len() * k);
    let mut flagged = Vec::new();
    let mut z = vec![0.0; m.dim];
    for (id, row) in x.ids().iter().zip(x.rows()) {
        m.standardization.apply_row(row, &mut z);
        let start = probs.len();
        probs.extend(m.svms.iter().map(|s| s.probability(&z)));
        let sum: f64 = probs[start..].iter().sum();
        if sum > 0.0 && sum.is_finite() {
            probs[start..].iter_mut().for_each(|p| *p /= sum);
        } else {
            probs[start..].iter_mut().for_each(|p| *p = 1.0 / k as f64);
            flagged.push(id.clone());
        }
    }
    let scores = ScoreMatrix::new(x.ids().to_vec(), m.classes.clone(), probs)?;
    Ok((scores, flagged))
}

/// [`predict_proba_flagged`] without the fallback list.
pub fn predict_proba(m: &MulticlassModel, x: &FeatureMatrix) -> Result<ScoreMatrix> {
    predict_proba_flagged(m, x).map(|(s, _)| s)
}
