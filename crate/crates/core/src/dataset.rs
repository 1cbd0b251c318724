//! In-memory datasets: per-view feature matrices, label tables, score
//! matrices, patch specifications, view alignment and stratified splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::num;

/// Tolerance on the row sum of a probability row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

const SPLIT_STREAM: u64 = 0x5eed;

/// Samples of one view ("model"), one row per sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    view_name: String,
    ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major `values`, checking every invariant.
    pub fn new(
        view_name: impl Into<String>,
        ids: Vec<String>,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dim must be positive".into()));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::InvalidMatrix(alloc::format!(
                "{} values for {} rows of dim {}",
                values.len(),
                ids.len(),
                dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite value".into()));
        }
        check_ids(&ids)?;
        Ok(Self { view_name: view_name.into(), ids, dim, values })
    }

    pub fn view_name(&self) -> &str {
        &self.view_name
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn with_view_name(mut self, name: impl Into<String>) -> Self {
        self.view_name = name.into();
        self
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let mut ids = Vec::with_capacity(indices.len());
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            ids.push(self.ids[i].clone());
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix { view_name: self.view_name.clone(), ids, dim: self.dim, values }
    }

    /// Rows for `ids`; every id must be present.
    pub fn select_ids(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let index: BTreeMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let rows = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| {
                    Error::NotAligned(alloc::format!("`{id}` missing from view `{}`", self.view_name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select(&rows))
    }
}

/// Returns true when `token` is usable as a label: non-empty, no whitespace,
/// no comma (class lists are comma-separated).
pub fn is_valid_token(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(|c| c.is_whitespace() || c == ',')
}

/// Returns true when `id` is usable as a sample id: non-empty, no whitespace
/// and no leading `#` (such a line would read back as a comment).
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('#') && !id.chars().any(char::is_whitespace)
}

fn check_ids<'a>(ids: impl IntoIterator<Item = &'a String>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !is_valid_id(id) {
            return Err(Error::InvalidMatrix(alloc::format!("invalid id `{id}`")));
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidMatrix(alloc::format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}

/// Sample id to label token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    entries: BTreeMap<String, String>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a label. Rejects invalid ids and label tokens.
    pub fn insert(&mut self, id: impl Into<String>, label: impl Into<String>) -> Result<()> {
        let (id, label) = (id.into(), label.into());
        if !is_valid_token(&label) {
            return Err(Error::InvalidLabel { line: 0, label });
        }
        if !is_valid_id(&id) {
            return Err(Error::InvalidMatrix(alloc::format!("invalid id `{id}`")));
        }
        self.entries.insert(id, label);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Distinct labels, sorted.
    pub fn classes(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.entries.values().collect();
        set.into_iter().cloned().collect()
    }

    /// Table restricted to `ids` (ids without a label are skipped).
    pub fn restrict(&self, ids: &[String]) -> LabelTable {
        let entries = ids
            .iter()
            .filter_map(|id| self.entries.get(id).map(|l| (id.clone(), l.clone())))
            .collect();
        LabelTable { entries }
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for LabelTable {
    /// Collects pairs; panics on an invalid label token.
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut t = LabelTable::new();
        for (k, v) in iter {
            t.insert(k, v).expect("valid label token");
        }
        t
    }
}

/// Views sharing one id sequence, plus a label for every id.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<FeatureMatrix>,
    labels: LabelTable,
}

impl MultiViewDataset {
    /// Wraps already-aligned views. Fails if id sequences differ or a label is
    /// missing.
    pub fn new(views: Vec<FeatureMatrix>, labels: &LabelTable) -> Result<Self> {
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
        if let Some(id) = first.ids().iter().find(|id| !labels.contains(id)) {
            return Err(Error::NotAligned(alloc::format!("id `{id}` has no label")));
        }
        let labels = labels.restrict(first.ids());
        Ok(Self { views, labels })
    }

    pub fn views(&self) -> &[FeatureMatrix] {
        &self.views
    }

    pub fn labels(&self) -> &LabelTable {
        &self.labels
    }

    pub fn ids(&self) -> &[String] {
        self.views[0].ids()
    }

    pub fn len(&self) -> usize {
        self.views[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.views[0].is_empty()
    }

    /// Label of every sample, in id order.
    pub fn label_column(&self) -> Vec<&str> {
        self.ids().iter().map(|id| self.labels.get(id).expect("labeled")).collect()
    }

    /// Samples at `indices` (kept in the given order).
    pub fn select(&self, indices: &[usize]) -> MultiViewDataset {
        let views: Vec<_> = self.views.iter().map(|v| v.select(indices)).collect();
        let labels = self.labels.restrict(views[0].ids());
        MultiViewDataset { views, labels }
    }

    /// Same samples, different labels. Every id must be labeled in `labels`.
    pub fn relabel(&self, labels: &LabelTable) -> Result<MultiViewDataset> {
        MultiViewDataset::new(self.views.clone(), labels)
    }
}

/// How many ids each input lost during [`align_views`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignReport {
    /// `(view name, ids of that view not retained)` in input order.
    pub dropped_per_view: Vec<(String, usize)>,
    /// Labeled ids not retained.
    pub dropped_labels: usize,
}

/// Restricts every view to the ids present in all views and in `labels`,
/// sorted lexicographically.
pub fn align_views(
    views: &[FeatureMatrix],
    labels: &LabelTable,
) -> Result<(MultiViewDataset, AlignReport)> {
    if views.is_empty() {
        return Err(Error::NotAligned("no views".into()));
    }
    let mut common: BTreeSet<&str> = views[0].ids().iter().map(String::as_str).collect();
    for v in &views[1..] {
        let ids: BTreeSet<&str> = v.ids().iter().map(String::as_str).collect();
        common.retain(|id| ids.contains(id));
    }
    common.retain(|id| labels.contains(id));
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let ids: Vec<String> = common.iter().map(|s| s.to_string()).collect();
    let aligned = views.iter().map(|v| v.select_ids(&ids)).collect::<Result<Vec<_>>>()?;
    let report = AlignReport {
        dropped_per_view: views
            .iter()
            .map(|v| (v.view_name().to_string(), v.len() - ids.len()))
            .collect(),
        dropped_labels: labels.len() - ids.len(),
    };
    let dataset = MultiViewDataset::new(aligned, labels)?;
    Ok((dataset, report))
}

/// Result of a stratified split. `warnings` lists labels that received no
/// training sample (the split is still returned).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome<T> {
    pub train: T,
    pub test: T,
    pub warnings: Vec<String>,
}

/// Index-level stratified split of `labels` (one entry per sample).
///
/// Per label, in sorted label order, the label's indices are shuffled with a
/// generator seeded by `seed` and the first `round_half_up(n * fraction)` go to
/// train. Both index lists come back sorted ascending.
pub fn stratified_indices(
    labels: &[&str],
    train_fraction: f64,
    seed: u64,
) -> Result<SplitOutcome<Vec<usize>>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "train fraction must be in (0,1), got {train_fraction}"
        )));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidParameter("split needs at least 2 samples".into()));
    }
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut rng = num::rng(seed, SPLIT_STREAM);
    let (mut train, mut test, mut warnings) = (Vec::new(), Vec::new(), Vec::new());
    for (label, mut idx) in by_label {
        idx.shuffle(&mut rng);
        let n_train = (num::round_half_up(idx.len() as f64 * train_fraction) as usize).min(idx.len());
        if n_train == 0 {
            warnings.push(alloc::format!("DegenerateSplit: label `{label}` has no training sample"));
        }
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitOutcome { train, test, warnings })
}

/// Deterministic stratified train/test split of a dataset.
pub fn split_dataset(
    d: &MultiViewDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitOutcome<MultiViewDataset>> {
    let split = stratified_indices(&d.label_column(), train_fraction, seed)?;
    Ok(SplitOutcome {
        train: d.select(&split.train),
        test: d.select(&split.test),
        warnings: split.warnings,
    })
}

/// Per-sample class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    ids: Vec<String>,
    classes: Vec<String>,
    probs: Vec<f64>,
}

impl ScoreMatrix {
    /// Builds a matrix, checking that each row is a probability vector.
    pub fn new(ids: Vec<String>, classes: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidMatrix("no classes".into()));
        }
        let unique: BTreeSet<&String> = classes.iter().collect();
        if unique.len() != classes.len() {
            return Err(Error::InvalidMatrix("duplicate class".into()));
        }
        check_ids(&ids)?;
        if classes.iter().any(|c| !is_valid_token(c)) {
            return Err(Error::InvalidMatrix("invalid class token".into()));
        }
        if probs.len() != ids.len() * classes.len() {
            return Err(Error::InvalidMatrix("probability count does not match ids x classes".into()));
        }
        for (r, row) in probs.chunks_exact(classes.len()).enumerate() {
            check_probability_row(row).map_err(|detail| {
                Error::InvalidMatrix(alloc::format!("row {} (`{}`): {detail}", r, ids[r]))
            })?;
        }
        Ok(Self { ids, classes, probs })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.classes.len();
        &self.probs[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.probs.chunks_exact(self.classes.len())
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    /// Probability of `class` for every row.
    pub fn column(&self, class: &str) -> Option<Vec<f64>> {
        let k = self.class_index(class)?;
        Some(self.rows().map(|r| r[k]).collect())
    }

    /// Most probable class per row; ties go to the earliest class.
    pub fn argmax_labels(&self) -> Vec<&str> {
        self.rows()
            .map(|row| {
                let mut best = 0;
                for (k, p) in row.iter().enumerate() {
                    if *p > row[best] {
                        best = k;
                    }
                }
                self.classes[best].as_str()
            })
            .collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> ScoreMatrix {
        let mut ids = Vec::with_capacity(indices.len());
        let mut probs = Vec::with_capacity(indices.len() * self.classes.len());
        for &i in indices {
            ids.push(self.ids[i].clone());
            probs.extend_from_slice(self.row(i));
        }
        ScoreMatrix { ids, classes: self.classes.clone(), probs }
    }
}

pub(crate) fn check_probability_row(row: &[f64]) -> core::result::Result<(), String> {
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err("probability outside [0,1]".into());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(alloc::format!("row sums to {sum}"));
    }
    Ok(())
}

/// Integer pixel coordinate, `x` = column, `y` = row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: u32,
    pub y: u32,
}

impl Point {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// A road segment on one satellite image, given by its two end points.
/// Identical end points are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchSpec {
    pub image_id: String,
    pub p1: Point,
    pub p2: Point,
    /// `passable` or `non_passable`; `None` for unlabeled patches.
    pub label: Option<String>,
}
