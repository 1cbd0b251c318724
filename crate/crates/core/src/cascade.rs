//! Two-stage cascade: evidence first, passability only for evidence-positive
//! samples.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{FeatureMatrix, LabelTable, MultiViewDataset};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fusion::{predict_fusion, train_fusion, FusionModel, FusionStrategy};
use crate::svm::SvmHyperParams;

pub const EVIDENCE: &str = "evidence";
pub const NO_EVIDENCE: &str = "no_evidence";
pub const PASSABLE: &str = "passable";
pub const NON_PASSABLE: &str = "non_passable";

/// Final three-way decision for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CascadeOutcome {
    NoEvidence,
    Passable,
    NonPassable,
}

impl CascadeOutcome {
    pub const ALL: [CascadeOutcome; 3] =
        [CascadeOutcome::NoEvidence, CascadeOutcome::Passable, CascadeOutcome::NonPassable];

    pub fn as_str(self) -> &'static str {
        match self {
            CascadeOutcome::NoEvidence => NO_EVIDENCE,
            CascadeOutcome::Passable => PASSABLE,
            CascadeOutcome::NonPassable => NON_PASSABLE,
        }
    }
}

impl fmt::Display for CascadeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CascadeOutcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            NO_EVIDENCE => Ok(CascadeOutcome::NoEvidence),
            PASSABLE => Ok(CascadeOutcome::Passable),
            NON_PASSABLE => Ok(CascadeOutcome::NonPassable),
            other => Err(Error::UnknownLabel(other.into())),
        }
    }
}

/// Cascade prediction for one sample. `stage2_proba` is present exactly when
/// the sample passed stage 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeLabel {
    pub id: String,
    pub value: CascadeOutcome,
    pub stage1_proba: f64,
    pub stage2_proba: Option<f64>,
}

impl CascadeLabel {
    /// Decision rule shared by prediction and tests: `p1 >= t1` passes stage 1,
    /// `p2 >= t2` is passable.
    pub fn decide(id: String, p1: f64, p2: Option<f64>, t1: f64, t2: f64) -> CascadeLabel {
        if p1 < t1 {
            return CascadeLabel { id, value: CascadeOutcome::NoEvidence, stage1_proba: p1, stage2_proba: None };
        }
        let p2 = p2.expect("stage 2 probability for a stage-1 positive");
        let value = if p2 >= t2 { CascadeOutcome::Passable } else { CascadeOutcome::NonPassable };
        CascadeLabel { id, value, stage1_proba: p1, stage2_proba: Some(p2) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    /// Classes `evidence`, `no_evidence`.
    pub stage1: FusionModel,
    /// Classes `non_passable`, `passable`.
    pub stage2: FusionModel,
    pub threshold1: f64,
    pub threshold2: f64,
}

impl CascadeModel {
    pub fn strategy(&self) -> FusionStrategy {
        self.stage1.strategy
    }

    /// Replaces the thresholds; both must lie in (0, 1).
    pub fn with_thresholds(mut self, threshold1: f64, threshold2: f64) -> Result<Self> {
        for t in [threshold1, threshold2] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(alloc::format!("threshold {t} outside (0,1)")));
            }
        }
        self.threshold1 = threshold1;
        self.threshold2 = threshold2;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.stage1.validate()?;
        self.stage2.validate()?;
        if self.stage1.view_names != self.stage2.view_names || self.stage1.view_dims != self.stage2.view_dims {
            return Err(Error::InvalidParameter("cascade stages use different views".into()));
        }
        if self.stage1.classes() != [EVIDENCE, NO_EVIDENCE] {
            return Err(Error::InvalidParameter("stage 1 classes must be evidence,no_evidence".into()));
        }
        if self.stage2.classes() != [NON_PASSABLE, PASSABLE] {
            return Err(Error::InvalidParameter("stage 2 classes must be non_passable,passable".into()));
        }
        for t in [self.threshold1, self.threshold2] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(alloc::format!("threshold {t} outside (0,1)")));
            }
        }
        Ok(())
    }
}

/// Trains stage 1 on every sample of `d` (labels `evidence`/`no_evidence`) and
/// stage 2 on the evidence-positive samples that carry a passability label in
/// `passability`. Ids of `passability` absent from `d` are ignored.
pub fn train_cascade<E: Executor>(
    d: &MultiViewDataset,
    passability: &LabelTable,
    strategy: FusionStrategy,
    hp: &SvmHyperParams,
    exec: &E,
) -> Result<CascadeModel> {
    for (_, label) in d.labels().iter() {
        if label != EVIDENCE && label != NO_EVIDENCE {
            return Err(Error::UnknownLabel(label.into()));
        }
    }
    let mut stage2_rows = Vec::new();
    for (id, label) in passability.iter() {
        if label != PASSABLE && label != NON_PASSABLE {
            return Err(Error::UnknownLabel(label.into()));
        }
        match d.labels().get(id) {
            Some(EVIDENCE) => {}
            Some(_) => return Err(Error::MissingPassabilityLabels { id: id.into() }),
            None => continue,
        }
        stage2_rows.push(id);
    }
    let index: Vec<usize> = d
        .ids()
        .iter()
        .enumerate()
        .filter(|(_, id)| stage2_rows.binary_search(&id.as_str()).is_ok())
        .map(|(i, _)| i)
        .collect();
    let subset = d.select(&index);
    let subset = subset_relabel(&subset, passability)?;
    if subset.labels().classes().len() < 2 {
        return Err(Error::Stage2SingleClass);
    }
    let stage1 = train_fusion(d, strategy, hp, exec)?;
    let stage2 = train_fusion(&subset, strategy, hp, exec)?;
    if stage1.classes() != [EVIDENCE, NO_EVIDENCE] {
        return Err(Error::SingleClassData);
    }
    Ok(CascadeModel { stage1, stage2, threshold1: 0.5, threshold2: 0.5 })
}

fn subset_relabel(subset: &MultiViewDataset, labels: &LabelTable) -> Result<MultiViewDataset> {
    if subset.is_empty() {
        return Err(Error::Stage2SingleClass);
    }
    subset.relabel(labels)
}

/// Runs the cascade on aligned `views`. Stage 2 is evaluated only on the
/// samples whose evidence probability reaches `threshold1`.
pub fn predict_cascade<E: Executor>(m: &CascadeModel, views: &[FeatureMatrix], exec: &E) -> Result<Vec<CascadeLabel>> {
    let s1 = predict_fusion(&m.stage1, views, exec)?;
    let p1 = s1.column(EVIDENCE).ok_or(Error::ClassMismatch)?;
    let positives: Vec<usize> = (0..p1.len()).filter(|i| p1[*i] >= m.threshold1).collect();
    let mut p2 = alloc::vec![None; p1.len()];
    if !positives.is_empty() {
        let sub: Vec<FeatureMatrix> = views.iter().map(|v| v.select(&positives)).collect();
        let s2 = predict_fusion(&m.stage2, &sub, exec)?;
        let col = s2.column(PASSABLE).ok_or(Error::ClassMismatch)?;
        for (i, p) in positives.into_iter().zip(col) {
            p2[i] = Some(p);
        }
    }
    Ok(s1
        .ids()
        .iter()
        .zip(p1)
        .zip(p2)
        .map(|((id, a), b)| CascadeLabel::decide(id.clone(), a, b, m.threshold1, m.threshold2))
        .collect())
}
