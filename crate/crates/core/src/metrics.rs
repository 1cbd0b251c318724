//! Confusion counts, accuracy, per-class accuracy, F1 and the cascade's mean
//! F1, plus the evaluation report and its text rendering.
//!
//! Zero-denominator conventions: precision is 0 when nothing was predicted
//! positive, recall is 0 when no truth is positive, and F1 is 0 whenever
//! there is no true positive. Reports flag every place a convention applied.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::cascade::{NON_PASSABLE, NO_EVIDENCE, PASSABLE};
use crate::error::{Error, Result};

/// The three cascade outcomes, the label universe of [`mean_f1`].
pub const CASCADE_LABELS: [&str; 3] = [NO_EVIDENCE, NON_PASSABLE, PASSABLE];

/// Counts per (truth, prediction) pair over a fixed label universe.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    labels: Vec<String>,
    counts: BTreeMap<(String, String), u64>,
    total: u64,
}

impl ConfusionCounts {
    /// Label universe, sorted.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, truth: &str, pred: &str) -> u64 {
        self.counts.get(&(truth.to_string(), pred.to_string())).copied().unwrap_or(0)
    }

    /// Non-zero cells in (truth, prediction) order.
    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.counts.iter().map(|((t, p), n)| (t.as_str(), p.as_str(), *n))
    }

    pub fn truth_count(&self, label: &str) -> u64 {
        self.counts.iter().filter(|((t, _), _)| t == label).map(|(_, n)| n).sum()
    }

    pub fn pred_count(&self, label: &str) -> u64 {
        self.counts.iter().filter(|((_, p), _)| p == label).map(|(_, n)| n).sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts.iter().filter(|((t, p), _)| t == p).map(|(_, n)| n).sum()
    }

    fn require_label(&self, label: &str) -> Result<()> {
        if self.labels.iter().any(|l| l == label) {
            Ok(())
        } else {
            Err(Error::UnknownLabel(label.into()))
        }
    }
}

/// Tallies aligned predictions against truth. The universe is every label
/// seen on either side.
pub fn confusion(pred: &[&str], truth: &[&str]) -> Result<ConfusionCounts> {
    let universe: BTreeSet<&str> = pred.iter().chain(truth).copied().collect();
    let universe: Vec<&str> = universe.into_iter().collect();
    confusion_over(pred, truth, &universe)
}

/// Tallies over an explicit label universe; labels outside it are errors.
pub fn confusion_over(pred: &[&str], truth: &[&str], universe: &[&str]) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    let labels: BTreeSet<&str> = universe.iter().copied().collect();
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (p, t) in pred.iter().zip(truth) {
        for l in [p, t] {
            if !labels.contains(l) {
                return Err(Error::UnknownLabel((*l).into()));
            }
        }
        *counts.entry((t.to_string(), p.to_string())).or_default() += 1;
    }
    Ok(ConfusionCounts {
        labels: labels.into_iter().map(String::from).collect(),
        counts,
        total: pred.len() as u64,
    })
}

/// F1 of one positive label with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Detail {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// A zero-denominator convention was applied.
    pub degenerate: bool,
}

/// One-vs-rest F1 of `positive`, with conventions applied.
pub fn f1_detail(c: &ConfusionCounts, positive: &str) -> Result<F1Detail> {
    if c.total == 0 {
        return Err(Error::EmptyInput);
    }
    c.require_label(positive)?;
    let tp = c.get(positive, positive);
    let fp = c.pred_count(positive) - tp;
    let fn_ = c.truth_count(positive) - tp;
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    // 2PR/(P+R) = 2tp/(2tp+fp+fn), evaluated with one rounding.
    let f1 = if tp == 0 { 0.0 } else { (2 * tp) as f64 / (2 * tp + fp + fn_) as f64 };
    Ok(F1Detail { tp, fp, fn_, precision, recall, f1, degenerate: tp + fp == 0 || tp + fn_ == 0 })
}

/// One-vs-rest F1 of `positive`.
pub fn f1(c: &ConfusionCounts, positive: &str) -> Result<f64> {
    f1_detail(c, positive).map(|d| d.f1)
}

/// Fraction of samples predicted correctly.
pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    if c.total == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(c.correct() as f64 / c.total as f64)
}

/// Recall of every label that occurs in the truth. Labels of the universe
/// with no truth sample are returned in the second list.
pub fn per_class_accuracy(c: &ConfusionCounts) -> (BTreeMap<String, f64>, Vec<String>) {
    let mut out = BTreeMap::new();
    let mut omitted = Vec::new();
    for l in &c.labels {
        let n = c.truth_count(l);
        if n == 0 {
            omitted.push(l.clone());
        } else {
            out.insert(l.clone(), c.get(l, l) as f64 / n as f64);
        }
    }
    (out, omitted)
}

/// Mean of the F1 scores of `passable` and `non_passable`, each one-vs-rest
/// over the three cascade outcomes (a `no_evidence` prediction on a passable
/// sample is a false negative for `passable`).
pub fn mean_f1(pred: &[&str], truth: &[&str]) -> Result<f64> {
    let c = confusion_over(pred, truth, &CASCADE_LABELS)?;
    Ok((f1(&c, PASSABLE)? + f1(&c, NON_PASSABLE)?) / 2.0)
}

/// Evaluation summary. Rates are fractions in [0,1].
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub samples: u64,
    pub overall_accuracy: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    pub f1_per_class: BTreeMap<String, f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub mean_f1: Option<f64>,
    pub flags: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

impl EvalReport {
    /// Report over an arbitrary label set (no mean F1).
    pub fn flat(pred: &[&str], truth: &[&str]) -> Result<EvalReport> {
        let c = confusion(pred, truth)?;
        Self::from_counts(&c, None)
    }

    /// Report over the three cascade outcomes, including mean F1.
    pub fn cascade(pred: &[&str], truth: &[&str]) -> Result<EvalReport> {
        let c = confusion_over(pred, truth, &CASCADE_LABELS)?;
        let mean = (f1(&c, PASSABLE)? + f1(&c, NON_PASSABLE)?) / 2.0;
        Self::from_counts(&c, Some(mean))
    }

    /// Report over a fixed universe (labels with no sample still get an F1
    /// entry, flagged).
    pub fn flat_over(pred: &[&str], truth: &[&str], universe: &[&str]) -> Result<EvalReport> {
        let c = confusion_over(pred, truth, universe)?;
        Self::from_counts(&c, None)
    }

    fn from_counts(c: &ConfusionCounts, mean_f1: Option<f64>) -> Result<EvalReport> {
        let overall_accuracy = accuracy(c)?;
        let (per_class_accuracy, omitted) = per_class_accuracy(c);
        let mut flags: Vec<String> =
            omitted.iter().map(|l| alloc::format!("no_truth_samples:{l}")).collect();
        let mut f1_per_class = BTreeMap::new();
        for l in c.labels() {
            let d = f1_detail(c, l)?;
            if d.degenerate {
                flags.push(alloc::format!("f1_zero_denominator:{l}"));
            }
            f1_per_class.insert(l.clone(), d.f1);
        }
        Ok(EvalReport {
            samples: c.total(),
            overall_accuracy,
            per_class_accuracy,
            f1_per_class,
            mean_f1,
            flags,
            metadata: BTreeMap::new(),
        })
    }

    /// REPORT v1 text: rates as percentages with two decimals.
    pub fn render_text(&self) -> String {
        let mut out = String::from("REPORT\t1\n");
        let _ = writeln!(out, "samples\t{}", self.samples);
        let _ = writeln!(out, "overall_accuracy\t{}", percent(self.overall_accuracy));
        if let Some(m) = self.mean_f1 {
            let _ = writeln!(out, "mean_f1\t{}", percent(m));
        }
        out.push_str("class\taccuracy\tf1\n");
        let classes: BTreeSet<&String> = self.per_class_accuracy.keys().chain(self.f1_per_class.keys()).collect();
        for c in classes {
            let acc = self.per_class_accuracy.get(c).map_or_else(|| "-".into(), |v| percent(*v));
            let f1 = self.f1_per_class.get(c).map_or_else(|| "-".into(), |v| percent(*v));
            let _ = writeln!(out, "{c}\t{acc}\t{f1}");
        }
        for f in &self.flags {
            let _ = writeln!(out, "flag\t{f}");
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "meta\t{k}\t{v}");
        }
        out
    }
}

/// `0.8881` -> `"88.81"`.
pub fn percent(rate: f64) -> String {
    alloc::format!("{:.2}", rate * 100.0)
}
