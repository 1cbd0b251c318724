//! Early, late and double fusion of several feature views.
//!
//! * early: per-sample L2-normalized view blocks are concatenated and one
//!   model is trained on the result;
//! * late: one model per view, per-class probabilities averaged;
//! * double: the early and late score matrices averaged.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{FeatureMatrix, MultiViewDataset, ScoreMatrix};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::multiclass::{predict_proba_flagged, train_ovr, MulticlassModel};
use crate::svm::SvmHyperParams;

const RENORMALIZE_DRIFT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FusionTag {
    Early,
    Late,
    Double,
}

impl FusionTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionTag::Early => "early",
            FusionTag::Late => "late",
            FusionTag::Double => "double",
        }
    }
}

impl fmt::Display for FusionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(FusionTag::Early),
            "late" => Ok(FusionTag::Late),
            "double" => Ok(FusionTag::Double),
            other => Err(Error::InvalidParameter(alloc::format!("unknown fusion strategy `{other}`"))),
        }
    }
}

/// How per-view scores are combined in late fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LateMode {
    #[default]
    MeanProba,
    /// Per-view argmax votes; output rows are one-hot on the winner.
    MajorityVote,
}

impl LateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LateMode::MeanProba => "mean_proba",
            LateMode::MajorityVote => "majority_vote",
        }
    }
}

impl FromStr for LateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_proba" | "mean-proba" => Ok(LateMode::MeanProba),
            "majority_vote" | "majority-vote" | "vote" => Ok(LateMode::MajorityVote),
            other => Err(Error::InvalidParameter(alloc::format!("unknown late mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FusionStrategy {
    pub tag: FusionTag,
    pub late_mode: LateMode,
    /// L2-normalize each view block before concatenation (early fusion).
    pub block_norm: bool,
}

impl FusionStrategy {
    pub fn new(tag: FusionTag) -> Self {
        Self { tag, late_mode: LateMode::MeanProba, block_norm: true }
    }

    fn uses_early(&self) -> bool {
        matches!(self.tag, FusionTag::Early | FusionTag::Double)
    }

    fn uses_late(&self) -> bool {
        matches!(self.tag, FusionTag::Late | FusionTag::Double)
    }
}

/// Trained components for one fusion strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub strategy: FusionStrategy,
    pub early_model: Option<MulticlassModel>,
    pub per_view_models: Vec<MulticlassModel>,
    pub view_names: Vec<String>,
    pub view_dims: Vec<usize>,
}

impl FusionModel {
    pub fn classes(&self) -> &[String] {
        self.early_model
            .as_ref()
            .or(self.per_view_models.first())
            .map(|m| m.classes.as_slice())
            .unwrap_or(&[])
    }

    /// Checks that components match the strategy and agree on classes.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(alloc::format!("fusion model: {m}")));
        let s = &self.strategy;
        if s.uses_early() != self.early_model.is_some() {
            return bad("early component presence does not match strategy");
        }
        let expected_late = if s.uses_late() { self.view_names.len() } else { 0 };
        if self.per_view_models.len() != expected_late {
            return bad("per-view component count does not match strategy");
        }
        if self.view_names.is_empty() || self.view_names.len() != self.view_dims.len() {
            return bad("view names and dims disagree");
        }
        let classes = self.classes();
        let all = self.early_model.iter().chain(&self.per_view_models);
        for m in all {
            m.validate()?;
            if m.classes != classes {
                return bad("components disagree on classes");
            }
        }
        if let Some(m) = &self.early_model {
            if m.dim != self.view_dims.iter().sum::<usize>() {
                return bad("early model dim is not the sum of view dims");
            }
        }
        for (m, d) in self.per_view_models.iter().zip(&self.view_dims) {
            if m.dim != *d {
                return bad("per-view model dim differs from view dim");
            }
        }
        Ok(())
    }
}

fn check_aligned(views: &[FeatureMatrix]) -> Result<()> {
    let first = views.first().ok_or_else(|| Error::NotAligned("no views".into()))?;
    for v in &views[1..] {
        if v.ids() != first.ids() {
            return Err(Error::NotAligned(alloc::format!(
                "view `{}` ids differ from view `{}`",
                v.view_name(),
                first.view_name()
            )));
        }
    }
    Ok(())
}

/// Concatenates aligned views, optionally L2-normalizing each block per
/// sample (all-zero blocks stay zero).
pub fn concat_views(views: &[FeatureMatrix], block_norm: bool) -> Result<FeatureMatrix> {
    check_aligned(views)?;
    let dim: usize = views.iter().map(FeatureMatrix::dim).sum();
    let n = views[0].len();
    let mut values = Vec::with_capacity(n * dim);
    for i in 0..n {
        for v in views {
            let row = v.row(i);
            let norm = crate::num::norm(row);
            if block_norm && norm > 0.0 {
                values.extend(row.iter().map(|x| x / norm));
            } else {
                values.extend_from_slice(row);
            }
        }
    }
    let names: Vec<&str> = views.iter().map(FeatureMatrix::view_name).collect();
    let name = alloc::format!("early({})", names.join("+"));
    FeatureMatrix::new(name, views[0].ids().to_vec(), dim, values)
}

/// Early fusion: block-normalized concatenation.
pub fn early_fuse(views: &[FeatureMatrix]) -> Result<FeatureMatrix> {
    concat_views(views, true)
}

fn check_compatible(scores: &[ScoreMatrix]) -> Result<()> {
    let first = scores.first().ok_or_else(|| Error::InvalidParameter("nothing to fuse".into()))?;
    for s in &scores[1..] {
        if s.classes() != first.classes() {
            return Err(Error::ClassMismatch);
        }
        if s.ids() != first.ids() {
            return Err(Error::IdMismatch);
        }
    }
    Ok(())
}

/// Per-cell mean of score matrices.
///
/// Each cell's values are summed in ascending order, so the result does not
/// depend on the order of `scores`.
pub fn late_fuse(scores: &[ScoreMatrix]) -> Result<ScoreMatrix> {
    check_compatible(scores)?;
    let first = &scores[0];
    let k = first.classes().len();
    let m = scores.len() as f64;
    let mut cell = Vec::with_capacity(scores.len());
    let mut probs = Vec::with_capacity(first.probs().len());
    for i in 0..first.len() {
        let start = probs.len();
        for c in 0..k {
            cell.clear();
            cell.extend(scores.iter().map(|s| s.row(i)[c]));
            cell.sort_by(f64::total_cmp);
            probs.push(cell.iter().sum::<f64>() / m);
        }
        let row = &mut probs[start..];
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_DRIFT {
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    ScoreMatrix::new(first.ids().to_vec(), first.classes().to_vec(), probs)
}

/// Mean of the early and late fusion scores.
pub fn double_fuse(early_scores: &ScoreMatrix, late_scores: &ScoreMatrix) -> Result<ScoreMatrix> {
    late_fuse(&[early_scores.clone(), late_scores.clone()])
}

/// Per-row majority vote over per-view argmax labels. Ties go to the earliest
/// class (classes are sorted, so the lexicographically smallest). Returns the
/// one-hot matrix and the ids decided by a tie.
pub fn majority_vote(scores: &[ScoreMatrix]) -> Result<(ScoreMatrix, Vec<String>)> {
    check_compatible(scores)?;
    let first = &scores[0];
    let k = first.classes().len();
    let mut probs = vec![0.0; first.len() * k];
    let mut ties = Vec::new();
    let mut votes = vec![0usize; k];
    for i in 0..first.len() {
        votes.iter_mut().for_each(|v| *v = 0);
        for s in scores {
            let row = s.row(i);
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            votes[best] += 1;
        }
        let top = *votes.iter().max().expect("k >= 1");
        let winner = votes.iter().position(|v| *v == top).expect("max exists");
        if votes.iter().filter(|v| **v == top).count() > 1 {
            ties.push(first.ids()[i].clone());
        }
        probs[i * k + winner] = 1.0;
    }
    let out = ScoreMatrix::new(first.ids().to_vec(), first.classes().to_vec(), probs)?;
    Ok((out, ties))
}

/// Trains the components `strategy` needs on dataset `d`.
pub fn train_fusion<E: Executor>(
    d: &MultiViewDataset,
    strategy: FusionStrategy,
    hp: &SvmHyperParams,
    exec: &E,
) -> Result<FusionModel> {
    let views = d.views();
    let early_model = if strategy.uses_early() {
        let fused = concat_views(views, strategy.block_norm)?;
        Some(train_ovr(&fused, d.labels(), hp, exec)?)
    } else {
        None
    };
    let per_view_models = if strategy.uses_late() {
        views.iter().map(|v| train_ovr(v, d.labels(), hp, exec)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(FusionModel {
        strategy,
        early_model,
        per_view_models,
        view_names: views.iter().map(|v| v.view_name().to_string()).collect(),
        view_dims: views.iter().map(FeatureMatrix::dim).collect(),
    })
}

fn check_views(m: &FusionModel, views: &[FeatureMatrix]) -> Result<()> {
    if views.len() != m.view_names.len() {
        return Err(Error::ViewMismatch(alloc::format!(
            "model expects {} views, got {}",
            m.view_names.len(),
            views.len()
        )));
    }
    for ((v, name), dim) in views.iter().zip(&m.view_names).zip(&m.view_dims) {
        if v.view_name() != name || v.dim() != *dim {
            return Err(Error::ViewMismatch(alloc::format!(
                "expected view `{name}` of dim {dim}, got `{}` of dim {}",
                v.view_name(),
                v.dim()
            )));
        }
    }
    check_aligned(views)
}

/// Fused class probabilities plus diagnostic notes (`uniform_fallback:<id>`,
/// `vote_tie:<id>`).
pub fn predict_fusion_flagged<E: Executor>(
    m: &FusionModel,
    views: &[FeatureMatrix],
    exec: &E,
) -> Result<(ScoreMatrix, Vec<String>)> {
    check_views(m, views)?;
    let mut notes = Vec::new();
    let early = match &m.early_model {
        Some(model) => {
            let fused = concat_views(views, m.strategy.block_norm)?;
            let (s, flagged) = predict_proba_flagged(model, &fused)?;
            notes.extend(flagged.into_iter().map(|id| alloc::format!("uniform_fallback:{id}")));
            Some(s)
        }
        None => None,
    };
    let late = if m.per_view_models.is_empty() {
        None
    } else {
        let pairs: Vec<(&MulticlassModel, &FeatureMatrix)> = m.per_view_models.iter().zip(views).collect();
        let per_view = exec
            .map(pairs, |(model, view)| predict_proba_flagged(model, view))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut scores = Vec::with_capacity(per_view.len());
        for (s, flagged) in per_view {
            notes.extend(flagged.into_iter().map(|id| alloc::format!("uniform_fallback:{id}")));
            scores.push(s);
        }
        Some(match m.strategy.late_mode {
            LateMode::MeanProba => late_fuse(&scores)?,
            LateMode::MajorityVote => {
                let (s, ties) = majority_vote(&scores)?;
                notes.extend(ties.into_iter().map(|id| alloc::format!("vote_tie:{id}")));
                s
            }
        })
    };
    let out = match (early, late) {
        (Some(e), Some(l)) => double_fuse(&e, &l)?,
        (Some(e), None) => e,
        (None, Some(l)) => l,
        (None, None) => return Err(Error::InvalidParameter("fusion model has no components".into())),
    };
    notes.sort();
    notes.dedup();
    Ok((out, notes))
}

/// Fused class probabilities for aligned `views`.
pub fn predict_fusion<E: Executor>(m: &FusionModel, views: &[FeatureMatrix], exec: &E) -> Result<ScoreMatrix> {
    predict_fusion_flagged(m, views, exec).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sm(ids: &[&str], classes: &[&str], probs: &[f64]) -> ScoreMatrix {
        ScoreMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            classes.iter().map(|s| s.to_string()).collect(),
            probs.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn early_fuse_dims_and_normalization() {
        let a = FeatureMatrix::new("a", vec!["s".into()], 2, vec![3.0, 4.0]).unwrap();
        let b = FeatureMatrix::new("b", vec!["s".into()], 3, vec![0.0, 0.0, 0.0]).unwrap();
        let f = early_fuse(&[a, b]).unwrap();
        assert_eq!(f.dim(), 5);
        assert_eq!(f.row(0), &[0.6, 0.8, 0.0, 0.0, 0.0]);
        assert_eq!(f.view_name(), "early(a+b)");
    }

    #[test]
    fn raw_concat_keeps_values() {
        let a = FeatureMatrix::new("a", vec!["s".into()], 2, vec![3.0, 4.0]).unwrap();
        let f = concat_views(&[a.clone(), a], false).unwrap();
        assert_eq!(f.row(0), &[3.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn early_fuse_needs_alignment() {
        let a = FeatureMatrix::new("a", vec!["s".into()], 1, vec![1.0]).unwrap();
        let b = FeatureMatrix::new("b", vec!["t".into()], 1, vec![1.0]).unwrap();
        assert!(matches!(early_fuse(&[a, b]), Err(Error::NotAligned(_))));
    }

    #[test]
    fn late_fuse_basics() {
        let a = sm(&["x"], &["p", "q"], &[1.0, 0.0]);
        let b = sm(&["x"], &["p", "q"], &[0.0, 1.0]);
        assert_eq!(late_fuse(&[a.clone(), b.clone()]).unwrap().row(0), &[0.5, 0.5]);
        assert_eq!(late_fuse(&[a.clone(), a.clone()]).unwrap(), a);
        assert_eq!(double_fuse(&a, &b).unwrap().row(0), &[0.5, 0.5]);
    }

    #[test]
    fn late_fuse_mismatches() {
        let a = sm(&["x"], &["p", "q"], &[1.0, 0.0]);
        let b = sm(&["x"], &["p", "r"], &[1.0, 0.0]);
        let c = sm(&["y"], &["p", "q"], &[1.0, 0.0]);
        assert_eq!(late_fuse(&[a.clone(), b]).unwrap_err(), Error::ClassMismatch);
        assert_eq!(late_fuse(&[a, c]).unwrap_err(), Error::IdMismatch);
    }

    #[test]
    fn vote_ties_go_to_first_class() {
        let a = sm(&["x", "y"], &["p", "q"], &[0.9, 0.1, 0.2, 0.8]);
        let b = sm(&["x", "y"], &["p", "q"], &[0.3, 0.7, 0.1, 0.9]);
        let (v, ties) = majority_vote(&[a, b]).unwrap();
        assert_eq!(v.row(0), &[1.0, 0.0]);
        assert_eq!(v.row(1), &[0.0, 1.0]);
        assert_eq!(ties, vec!["x".to_string()]);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("double".parse::<FusionTag>().unwrap(), FusionTag::Double);
        assert!("mid".parse::<FusionTag>().is_err());
        assert_eq!("vote".parse::<LateMode>().unwrap(), LateMode::MajorityVote);
    }
}
