//! Satellite patch evaluation protocols.
//!
//! * all-train: train on every labeled patch, evaluate on a designated test
//!   list (or on the training patches when none is given);
//! * half-train: stratified 50/50 split of the labeled patches, train on one
//!   half, evaluate on the other.
//!
//! Training patches are augmented; evaluation patches are not.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use crate::cascade::{NON_PASSABLE, PASSABLE};
use crate::dataset::{stratified_indices, FeatureMatrix, LabelTable, PatchSpec, ScoreMatrix};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::image::ImageBuffer;
use crate::metrics::EvalReport;
use crate::multiclass::{predict_proba, train_ovr};
use crate::num;
use crate::patch::{augment, classify_patch, extract_patch, rgb_histogram, AugmentPolicy};
use crate::svm::SvmHyperParams;

/// View name of histogram features.
pub const HISTOGRAM_VIEW: &str = "rgb_hist";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    AllTrain,
    HalfTrain,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::AllTrain => "all_train",
            Protocol::HalfTrain => "half_train",
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_train" | "all-train" => Ok(Protocol::AllTrain),
            "half_train" | "half-train" => Ok(Protocol::HalfTrain),
            other => Err(Error::InvalidParameter(alloc::format!("unknown protocol `{other}`"))),
        }
    }
}

/// Source of per-patch class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Featurizer {
    /// Built-in RGB histogram features and a trained one-vs-rest SVM.
    Histogram { bins: u32 },
    /// Externally produced probabilities over `passable`/`non_passable`; no
    /// training happens.
    Scores(ScoreMatrix),
}

/// Image lookup by image id.
pub trait ImageSource: Sync {
    fn image(&self, image_id: &str) -> Result<ImageBuffer>;
}

impl ImageSource for BTreeMap<String, ImageBuffer> {
    fn image(&self, image_id: &str) -> Result<ImageBuffer> {
        self.get(image_id).cloned().ok_or_else(|| Error::MissingImage(image_id.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    pub margin: u32,
    /// Base policy; each patch gets its own seed derived from `augment.seed`
    /// and its position in id order.
    pub augment: AugmentPolicy,
    pub hyper_params: SvmHyperParams,
    /// Seed of the half-train split.
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::HalfTrain,
            margin: crate::patch::DEFAULT_MARGIN,
            augment: AugmentPolicy::default(),
            hyper_params: SvmHyperParams::default(),
            seed: 0,
        }
    }
}

/// Outcome of [`run_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub report: EvalReport,
    /// `(patch id, predicted label)` for every evaluated patch, id order.
    pub predictions: Vec<(String, &'static str)>,
    /// Labeled patches used for training.
    pub train_patches: usize,
    /// Feature rows the classifier was trained on (patches x augmentation
    /// multiplier).
    pub train_samples: usize,
}

fn sorted_unique(patches: &[PatchSpec]) -> Result<Vec<&PatchSpec>> {
    let mut out: Vec<&PatchSpec> = patches.iter().collect();
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    if let Some(w) = out.windows(2).find(|w| w[0].image_id == w[1].image_id) {
        return Err(Error::InvalidParameter(alloc::format!("duplicate patch id `{}`", w[0].image_id)));
    }
    for p in &out {
        if let Some(l) = &p.label {
            if l != PASSABLE && l != NON_PASSABLE {
                return Err(Error::UnknownLabel(l.clone()));
            }
        }
    }
    Ok(out)
}

/// Patch cut out of its image.
pub fn load_patch<S: ImageSource + ?Sized>(images: &S, spec: &PatchSpec, margin: u32) -> Result<ImageBuffer> {
    extract_patch(&images.image(&spec.image_id)?, spec, margin)
}

/// Histogram feature rows for `patches`, augmented when `policy` is given
/// (row ids `<patch id>#<k>`).
pub fn histogram_features<S: ImageSource + ?Sized, E: Executor>(
    patches: &[&PatchSpec],
    images: &S,
    margin: u32,
    bins: u32,
    policy: Option<&AugmentPolicy>,
    exec: &E,
) -> Result<FeatureMatrix> {
    let jobs: Vec<(usize, &PatchSpec)> = patches.iter().copied().enumerate().collect();
    let rows = exec.map(jobs, |(i, spec)| -> Result<Vec<(String, Vec<f64>)>> {
        let patch = load_patch(images, spec, margin)?;
        match policy {
            None => Ok(alloc::vec![(spec.image_id.clone(), rgb_histogram(&patch, bins, true)?)]),
            Some(p) => {
                let p = AugmentPolicy { seed: num::mix(&[p.seed, i as u64]), ..p.clone() };
                augment(&patch, &p)?
                    .iter()
                    .enumerate()
                    .map(|(k, img)| Ok((alloc::format!("{}#{k}", spec.image_id), rgb_histogram(img, bins, true)?)))
                    .collect()
            }
        }
    });
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for r in rows {
        for (id, h) in r? {
            ids.push(id);
            values.extend(h);
        }
    }
    FeatureMatrix::new(HISTOGRAM_VIEW, ids, 3 * bins as usize, values)
}

/// Runs `cfg.protocol` and evaluates with the non-passable tie-break.
///
/// `test` is only used by all-train; when it is `None` the training patches
/// are also the evaluation patches. Unlabeled evaluation patches are predicted
/// but left out of the report.
pub fn run_protocol<S: ImageSource + ?Sized, E: Executor>(
    patches: &[PatchSpec],
    test: Option<&[PatchSpec]>,
    images: &S,
    featurizer: &Featurizer,
    cfg: &ProtocolConfig,
    exec: &E,
) -> Result<ProtocolRun> {
    cfg.augment.validate()?;
    let all = sorted_unique(patches)?;
    let labeled: Vec<&PatchSpec> = all.iter().copied().filter(|p| p.label.is_some()).collect();
    let (train, eval): (Vec<&PatchSpec>, Vec<&PatchSpec>) = match cfg.protocol {
        Protocol::AllTrain => {
            let eval = match test {
                Some(t) => sorted_unique(t)?,
                None => labeled.clone(),
            };
            (labeled, eval)
        }
        Protocol::HalfTrain => {
            let labels: Vec<&str> = labeled.iter().map(|p| p.label.as_deref().expect("labeled")).collect();
            for class in [NON_PASSABLE, PASSABLE] {
                let n = labels.iter().filter(|l| **l == class).count();
                if n < 2 {
                    return Err(Error::TooFewSamples { class: class.into(), found: n, required: 2 });
                }
            }
            let split = stratified_indices(&labels, 0.5, cfg.seed)?;
            (
                split.train.iter().map(|i| labeled[*i]).collect(),
                split.test.iter().map(|i| labeled[*i]).collect(),
            )
        }
    };

    let (probs, train_samples) = match featurizer {
        Featurizer::Histogram { bins } => {
            let x = histogram_features(&train, images, cfg.margin, *bins, Some(&cfg.augment), exec)?;
            let labels: LabelTable = train
                .iter()
                .flat_map(|p| {
                    let label = p.label.clone().expect("labeled");
                    (0..cfg.augment.multiplier()).map(move |k| (alloc::format!("{}#{k}", p.image_id), label.clone()))
                })
                .collect();
            let model = train_ovr(&x, &labels, &cfg.hyper_params, exec)?;
            let eval_x = histogram_features(&eval, images, cfg.margin, *bins, None, exec)?;
            (predict_proba(&model, &eval_x)?, x.len())
        }
        Featurizer::Scores(scores) => {
            let index: BTreeMap<&str, usize> =
                scores.ids().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            let rows = eval
                .iter()
                .map(|p| {
                    index.get(p.image_id.as_str()).copied().ok_or_else(|| {
                        Error::NotAligned(alloc::format!("no score row for patch `{}`", p.image_id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (scores.select(&rows), 0)
        }
    };
    let k_pass = probs.class_index(PASSABLE).ok_or(Error::ClassMismatch)?;
    let k_non = probs.class_index(NON_PASSABLE).ok_or(Error::ClassMismatch)?;
    let predictions: Vec<(String, &'static str)> = probs
        .ids()
        .iter()
        .zip(probs.rows())
        .map(|(id, row)| (id.clone(), classify_patch(row[k_pass], row[k_non])))
        .collect();

    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for ((_, p), spec) in predictions.iter().zip(&eval) {
        if let Some(l) = &spec.label {
            pred.push(*p);
            truth.push(l.as_str());
        }
    }
    let mut report = EvalReport::flat_over(&pred, &truth, &[NON_PASSABLE, PASSABLE])?;
    let meta = &mut report.metadata;
    meta.insert("protocol".into(), cfg.protocol.as_str().into());
    meta.insert("split_seed".into(), cfg.seed.to_string());
    meta.insert("margin".into(), cfg.margin.to_string());
    meta.insert("train_patches".into(), train.len().to_string());
    meta.insert("train_samples".into(), train_samples.to_string());
    meta.insert("eval_patches".into(), pred.len().to_string());
    meta.insert("headline".into(), "f1:non_passable".into());
    match featurizer {
        Featurizer::Histogram { bins } => {
            meta.insert("featurizer".into(), "rgb_histogram".into());
            meta.insert("bins".into(), bins.to_string());
            let flips: BTreeSet<&str> = cfg.augment.flips.iter().map(|f| f.as_str()).collect();
            let flips: Vec<&str> = flips.into_iter().collect();
            meta.insert("augment_flips".into(), if flips.is_empty() { "-".into() } else { flips.join(",") });
            meta.insert("augment_brightness_samples".into(), cfg.augment.brightness_samples.to_string());
            let (lo, hi) = cfg.augment.brightness_range;
            meta.insert("augment_brightness_range".into(), alloc::format!("{},{}", num::format_value(lo), num::format_value(hi)));
            meta.insert("augment_seed".into(), cfg.augment.seed.to_string());
            meta.insert("lambda".into(), num::format_value(cfg.hyper_params.lambda));
            meta.insert("epochs".into(), cfg.hyper_params.epochs.to_string());
            meta.insert("svm_seed".into(), cfg.hyper_params.seed.to_string());
        }
        Featurizer::Scores(_) => {
            meta.insert("featurizer".into(), "external_scores".into());
        }
    }
    Ok(ProtocolRun { report, predictions, train_patches: train.len(), train_samples })
}
