//! Line-oriented text formats.
//!
//! Every format is UTF-8 with tab-separated fields, one record per line. LF
//! is written, CRLF is accepted. Empty lines and lines starting with `#` are
//! skipped by every parser. Real numbers are written with 9 significant
//! digits.
//!
//! ```text
//! FVEC    1            LABELS  1          SCORE    1
//! view    <name>       <id>    <label>    classes  <c1>,<c2>,...
//! dim     <D>                             <id>     <p1>,...,<pK>
//! <id>    <v1>,...,<vD>
//!
//! PATCHES 1                                         PRED 1
//! <image_id> <x1> <y1> <x2> <y2> <label or ?>       <id> <label> <p1> <p2 or ->
//! ```
//!
//! Models: `MODEL 1` (one-vs-rest SVM), `FUSION 1` (embeds its MODEL
//! sections) and `CASCADE 1` (embeds two FUSION sections).

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;
use core::str::FromStr;

use crate::cascade::{CascadeLabel, CascadeModel, CascadeOutcome};
use crate::dataset::{is_valid_id, is_valid_token, FeatureMatrix, LabelTable, PatchSpec, Point, ScoreMatrix};
use crate::error::{Error, Result};
use crate::fusion::{FusionModel, FusionStrategy, FusionTag, LateMode};
use crate::multiclass::{MulticlassModel, Standardization};
use crate::num::{format_value, push_csv, push_value};
use crate::svm::{BinarySvm, SvmHyperParams};

/// Row-sum slack accepted when reading SCORE files; rows are renormalized
/// after reading. Nine-digit rendering can move a row sum by a few 1e-9.
pub const SCORE_READ_TOLERANCE: f64 = 1e-6;

/// The file kinds recognized by [`detect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatKind {
    Fvec,
    Labels,
    Score,
    Patches,
    Pred,
    Model,
    Fusion,
    Cascade,
}

impl FormatKind {
    pub fn magic(self) -> &'static str {
        match self {
            FormatKind::Fvec => "FVEC",
            FormatKind::Labels => "LABELS",
            FormatKind::Score => "SCORE",
            FormatKind::Patches => "PATCHES",
            FormatKind::Pred => "PRED",
            FormatKind::Model => "MODEL",
            FormatKind::Fusion => "FUSION",
            FormatKind::Cascade => "CASCADE",
        }
    }
}

/// Identifies a file by the magic word of its first record.
pub fn detect(text: &str) -> Option<FormatKind> {
    let (_, first) = Cursor::new(text).next()?;
    let magic = first.split('\t').next()?;
    [
        FormatKind::Fvec,
        FormatKind::Labels,
        FormatKind::Score,
        FormatKind::Patches,
        FormatKind::Pred,
        FormatKind::Model,
        FormatKind::Fusion,
        FormatKind::Cascade,
    ]
    .into_iter()
    .find(|k| k.magic() == magic)
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let mut last_line = 0;
        let lines = text
            .split('\n')
            .enumerate()
            .map(|(i, l)| {
                last_line = i + 1;
                (i + 1, l.strip_suffix('\r').unwrap_or(l))
            })
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { lines, pos: 0, last_line }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn end_line(&self) -> usize {
        self.last_line.max(1)
    }

    fn magic(&mut self, magic: &str) -> Result<()> {
        let (line, text) = self.next().ok_or(Error::MalformedHeader {
            line: self.end_line(),
            detail: alloc::format!("empty input, expected `{magic}\\t1`"),
        })?;
        match text.split_once('\t') {
            Some((m, "1")) if m == magic => Ok(()),
            _ => Err(Error::MalformedHeader { line, detail: alloc::format!("expected `{magic}\\t1`") }),
        }
    }

    /// Next record must be `key<TAB>value`.
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let end = self.end_line();
        let (line, text) = self
            .next()
            .ok_or_else(|| Error::MalformedHeader { line: end, detail: alloc::format!("missing `{key}` line") })?;
        match text.split_once('\t') {
            Some((k, v)) if k == key => Ok((line, v)),
            _ => Err(Error::MalformedHeader { line, detail: alloc::format!("expected `{key}` line") }),
        }
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<(usize, T)> {
        let (line, v) = self.field(key)?;
        v.parse()
            .map(|x| (line, x))
            .map_err(|_| Error::MalformedHeader { line, detail: alloc::format!("invalid `{key}` value `{v}`") })
    }

    fn csv(&mut self, key: &str, expected: usize) -> Result<Vec<f64>> {
        let (line, v) = self.field(key)?;
        parse_values(v, expected, line)
    }
}

fn parse_values(csv: &str, expected: usize, line: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(expected);
    for tok in csv.split(',') {
        let v: f64 = tok
            .trim()
            .parse()
            .map_err(|_| Error::MalformedRecord { line, detail: alloc::format!("invalid number `{tok}`") })?;
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { line });
        }
        out.push(v);
    }
    if out.len() != expected {
        return Err(Error::DimMismatch { line, expected, found: out.len() });
    }
    Ok(out)
}

fn split_record(line: usize, text: &str, fields: usize) -> Result<Vec<&str>> {
    let parts: Vec<&str> = text.split('\t').collect();
    if parts.len() != fields {
        return Err(Error::MalformedRecord {
            line,
            detail: alloc::format!("expected {fields} tab-separated fields, found {}", parts.len()),
        });
    }
    if !is_valid_id(parts[0]) {
        return Err(Error::MalformedRecord { line, detail: alloc::format!("invalid id `{}`", parts[0]) });
    }
    Ok(parts)
}

fn token_list(line: usize, v: &str) -> Result<Vec<String>> {
    let items: Vec<String> = v.split(',').map(str::to_string).collect();
    if let Some(bad) = items.iter().find(|c| !is_valid_token(c)) {
        return Err(Error::InvalidLabel { line, label: bad.clone() });
    }
    let unique: BTreeSet<&String> = items.iter().collect();
    if unique.len() != items.len() {
        return Err(Error::MalformedHeader { line, detail: "duplicate class".into() });
    }
    Ok(items)
}

pub fn parse_fvec(text: &str) -> Result<FeatureMatrix> {
    let mut cur = Cursor::new(text);
    cur.magic("FVEC")?;
    let (_, view) = cur.field("view")?;
    let (dim_line, dim): (usize, usize) = cur.parsed("dim")?;
    if dim == 0 {
        return Err(Error::MalformedHeader { line: dim_line, detail: "dim must be positive".into() });
    }
    let mut ids = Vec::new();
    let mut seen = BTreeSet::new();
    let mut values = Vec::new();
    while let Some((line, text)) = cur.next() {
        let parts = split_record(line, text, 2)?;
        if !seen.insert(parts[0]) {
            return Err(Error::DuplicateId { line, id: parts[0].into() });
        }
        values.extend(parse_values(parts[1], dim, line)?);
        ids.push(parts[0].to_string());
    }
    FeatureMatrix::new(view, ids, dim, values)
}

pub fn write_fvec(m: &FeatureMatrix) -> String {
    let mut out = alloc::format!("FVEC\t1\nview\t{}\ndim\t{}\n", m.view_name(), m.dim());
    for (id, row) in m.ids().iter().zip(m.rows()) {
        out.push_str(id);
        out.push('\t');
        push_csv(&mut out, row);
        out.push('\n');
    }
    out
}

pub fn parse_labels(text: &str) -> Result<LabelTable> {
    let mut cur = Cursor::new(text);
    cur.magic("LABELS")?;
    let mut t = LabelTable::new();
    while let Some((line, text)) = cur.next() {
        let parts = split_record(line, text, 2)?;
        if t.contains(parts[0]) {
            return Err(Error::DuplicateId { line, id: parts[0].into() });
        }
        t.insert(parts[0], parts[1]).map_err(|_| Error::InvalidLabel { line, label: parts[1].into() })?;
    }
    Ok(t)
}

pub fn write_labels(t: &LabelTable) -> String {
    let mut out = String::from("LABELS\t1\n");
    for (id, label) in t.iter() {
        let _ = writeln!(out, "{id}\t{label}");
    }
    out
}

/// Reads a SCORE file. Rows must lie in [0,1] and sum to 1 within
/// [`SCORE_READ_TOLERANCE`]; they are then renormalized.
pub fn parse_scores(text: &str) -> Result<ScoreMatrix> {
    let mut cur = Cursor::new(text);
    cur.magic("SCORE")?;
    let (cline, classes) = cur.field("classes")?;
    let classes = token_list(cline, classes)?;
    let k = classes.len();
    let mut ids = Vec::new();
    let mut seen = BTreeSet::new();
    let mut probs = Vec::new();
    while let Some((line, text)) = cur.next() {
        let parts = split_record(line, text, 2)?;
        if !seen.insert(parts[0]) {
            return Err(Error::DuplicateId { line, id: parts[0].into() });
        }
        let mut row = parse_values(parts[1], k, line)?;
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidProbabilities { line, detail: "probability outside [0,1]".into() });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SCORE_READ_TOLERANCE {
            return Err(Error::InvalidProbabilities { line, detail: alloc::format!("row sums to {sum}") });
        }
        row.iter_mut().for_each(|p| *p /= sum);
        probs.extend(row);
        ids.push(parts[0].to_string());
    }
    ScoreMatrix::new(ids, classes, probs)
}

pub fn write_scores(s: &ScoreMatrix) -> String {
    let mut out = alloc::format!("SCORE\t1\nclasses\t{}\n", s.classes().join(","));
    for (id, row) in s.ids().iter().zip(s.rows()) {
        out.push_str(id);
        out.push('\t');
        push_csv(&mut out, row);
        out.push('\n');
    }
    out
}

pub fn parse_patches(text: &str) -> Result<Vec<PatchSpec>> {
    let mut cur = Cursor::new(text);
    cur.magic("PATCHES")?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    while let Some((line, text)) = cur.next() {
        let parts = split_record(line, text, 6)?;
        if !seen.insert(parts[0]) {
            return Err(Error::DuplicateId { line, id: parts[0].into() });
        }
        let mut coord = [0u32; 4];
        for (c, tok) in coord.iter_mut().zip(&parts[1..5]) {
            *c = tok.parse().map_err(|_| Error::MalformedRecord {
                line,
                detail: alloc::format!("invalid coordinate `{tok}`"),
            })?;
        }
        let label = match parts[5] {
            "?" => None,
            l @ (crate::cascade::PASSABLE | crate::cascade::NON_PASSABLE) => Some(l.to_string()),
            other => return Err(Error::InvalidLabel { line, label: other.into() }),
        };
        out.push(PatchSpec {
            image_id: parts[0].into(),
            p1: Point::new(coord[0], coord[1]),
            p2: Point::new(coord[2], coord[3]),
            label,
        });
    }
    Ok(out)
}

pub fn write_patches(patches: &[PatchSpec]) -> String {
    let mut out = String::from("PATCHES\t1\n");
    for p in patches {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.image_id,
            p.p1.x,
            p.p1.y,
            p.p2.x,
            p.p2.y,
            p.label.as_deref().unwrap_or("?")
        );
    }
    out
}

pub fn parse_predictions(text: &str) -> Result<Vec<CascadeLabel>> {
    let mut cur = Cursor::new(text);
    cur.magic("PRED")?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let prob = |line: usize, tok: &str| -> Result<f64> {
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::MalformedRecord { line, detail: alloc::format!("invalid probability `{tok}`") })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidProbabilities { line, detail: "probability outside [0,1]".into() });
        }
        Ok(v)
    };
    while let Some((line, text)) = cur.next() {
        let parts = split_record(line, text, 4)?;
        if !seen.insert(parts[0]) {
            return Err(Error::DuplicateId { line, id: parts[0].into() });
        }
        let value: CascadeOutcome =
            parts[1].parse().map_err(|_| Error::InvalidLabel { line, label: parts[1].into() })?;
        let stage1_proba = prob(line, parts[2])?;
        let stage2_proba = match parts[3] {
            "-" => None,
            tok => Some(prob(line, tok)?),
        };
        if stage2_proba.is_some() == (value == CascadeOutcome::NoEvidence) {
            return Err(Error::MalformedRecord {
                line,
                detail: "stage-2 probability must be present exactly for evidence-positive labels".into(),
            });
        }
        out.push(CascadeLabel { id: parts[0].into(), value, stage1_proba, stage2_proba });
    }
    Ok(out)
}

pub fn write_predictions(preds: &[CascadeLabel]) -> String {
    let mut out = String::from("PRED\t1\n");
    for p in preds {
        out.push_str(&p.id);
        out.push('\t');
        out.push_str(p.value.as_str());
        out.push('\t');
        push_value(&mut out, p.stage1_proba);
        out.push('\t');
        match p.stage2_proba {
            Some(v) => push_value(&mut out, v),
            None => out.push('-'),
        }
        out.push('\n');
    }
    out
}

const FLAG_STANDARDIZED: &str = "standardized";
const FLAG_FALLBACK: &str = "calibration_fallback:";

fn write_model_into(out: &mut String, m: &MulticlassModel) {
    let hp = &m.hyper_params;
    let _ = write!(
        out,
        "MODEL\t1\nclasses\t{}\ndim\t{}\nlambda\t{}\nepochs\t{}\nseed\t{}\nflags\t",
        m.classes.join(","),
        m.dim,
        format_value(hp.lambda),
        hp.epochs,
        hp.seed
    );
    out.push_str(FLAG_STANDARDIZED);
    for c in m.calibration_fallbacks() {
        out.push(',');
        out.push_str(FLAG_FALLBACK);
        out.push_str(c);
    }
    out.push_str("\nmean\t");
    push_csv(out, &m.standardization.mean);
    out.push_str("\nscale\t");
    push_csv(out, &m.standardization.scale);
    out.push('\n');
    for (class, svm) in m.classes.iter().zip(&m.svms) {
        let _ = writeln!(out, "class\t{class}");
        out.push_str("w\t");
        push_csv(out, &svm.w);
        out.push_str("\nb\t");
        push_value(out, svm.b);
        out.push_str("\nplatt\t");
        push_csv(out, &[svm.platt_a, svm.platt_b]);
        out.push('\n');
    }
}

fn parse_model_from(cur: &mut Cursor<'_>) -> Result<MulticlassModel> {
    cur.magic("MODEL")?;
    let (cline, classes) = cur.field("classes")?;
    let classes = token_list(cline, classes)?;
    let (dline, dim): (usize, usize) = cur.parsed("dim")?;
    if dim == 0 {
        return Err(Error::MalformedHeader { line: dline, detail: "dim must be positive".into() });
    }
    let (_, lambda) = cur.parsed("lambda")?;
    let (_, epochs) = cur.parsed("epochs")?;
    let (_, seed) = cur.parsed("seed")?;
    let hyper_params = SvmHyperParams { lambda, epochs, seed };
    let (fline, flags) = cur.field("flags")?;
    let mut fallbacks = BTreeSet::new();
    for f in flags.split(',') {
        if let Some(c) = f.strip_prefix(FLAG_FALLBACK) {
            fallbacks.insert(c);
        } else if f != FLAG_STANDARDIZED {
            return Err(Error::MalformedHeader { line: fline, detail: alloc::format!("unknown flag `{f}`") });
        }
    }
    let mean = cur.csv("mean", dim)?;
    let scale = cur.csv("scale", dim)?;
    let mut svms = Vec::with_capacity(classes.len());
    for class in &classes {
        let (line, c) = cur.field("class")?;
        if c != class {
            return Err(Error::MalformedHeader { line, detail: alloc::format!("expected class `{class}`") });
        }
        let w = cur.csv("w", dim)?;
        let (bline, b) = cur.field("b")?;
        let b = parse_values(b, 1, bline)?[0];
        let platt = cur.csv("platt", 2)?;
        svms.push(BinarySvm {
            w,
            b,
            platt_a: platt[0],
            platt_b: platt[1],
            calibration_fallback: fallbacks.contains(class.as_str()),
        });
    }
    let m = MulticlassModel { classes, svms, dim, standardization: Standardization { mean, scale }, hyper_params };
    m.validate().map_err(|e| Error::MalformedHeader { line: cline, detail: e.to_string() })?;
    Ok(m)
}

pub fn write_model(m: &MulticlassModel) -> String {
    let mut out = String::new();
    write_model_into(&mut out, m);
    out
}

pub fn parse_model(text: &str) -> Result<MulticlassModel> {
    let mut cur = Cursor::new(text);
    let m = parse_model_from(&mut cur)?;
    trailing(&cur)?;
    Ok(m)
}

fn trailing(cur: &Cursor<'_>) -> Result<()> {
    match cur.peek() {
        Some((line, _)) => Err(Error::MalformedRecord { line, detail: "unexpected trailing content".into() }),
        None => Ok(()),
    }
}

fn write_fusion_into(out: &mut String, m: &FusionModel) {
    let s = &m.strategy;
    let _ = writeln!(
        out,
        "FUSION\t1\nstrategy\t{}\nlate_mode\t{}\nblock_norm\t{}\nviews\t{}",
        s.tag,
        s.late_mode.as_str(),
        s.block_norm,
        m.view_names.join("\t")
    );
    let dims: Vec<String> = m.view_dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "dims\t{}", dims.join(","));
    if let Some(e) = &m.early_model {
        out.push_str("component\tearly\n");
        write_model_into(out, e);
    }
    for (name, v) in m.view_names.iter().zip(&m.per_view_models) {
        let _ = writeln!(out, "component\tview\t{name}");
        write_model_into(out, v);
    }
}

fn parse_fusion_from(cur: &mut Cursor<'_>) -> Result<FusionModel> {
    cur.magic("FUSION")?;
    let (_, tag): (usize, FusionTag) = cur.parsed("strategy")?;
    let (_, late_mode): (usize, LateMode) = cur.parsed("late_mode")?;
    let (_, block_norm): (usize, bool) = cur.parsed("block_norm")?;
    let (vline, views) = cur.field("views")?;
    let view_names: Vec<String> = views.split('\t').map(str::to_string).collect();
    let (dline, dims) = cur.field("dims")?;
    let view_dims = dims
        .split(',')
        .map(|d| d.parse::<usize>())
        .collect::<core::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::MalformedHeader { line: dline, detail: "invalid dims".into() })?;
    if view_dims.len() != view_names.len() {
        return Err(Error::MalformedHeader { line: dline, detail: "dims and views differ in length".into() });
    }
    let strategy = FusionStrategy { tag, late_mode, block_norm };
    let mut early_model = None;
    if matches!(tag, FusionTag::Early | FusionTag::Double) {
        let (line, c) = cur.field("component")?;
        if c != "early" {
            return Err(Error::MalformedHeader { line, detail: "expected early component".into() });
        }
        early_model = Some(parse_model_from(cur)?);
    }
    let mut per_view_models = Vec::new();
    if matches!(tag, FusionTag::Late | FusionTag::Double) {
        for name in &view_names {
            let (line, c) = cur.field("component")?;
            if c.strip_prefix("view\t") != Some(name.as_str()) {
                return Err(Error::MalformedHeader { line, detail: alloc::format!("expected view component `{name}`") });
            }
            per_view_models.push(parse_model_from(cur)?);
        }
    }
    let m = FusionModel { strategy, early_model, per_view_models, view_names, view_dims };
    m.validate().map_err(|e| Error::MalformedHeader { line: vline, detail: e.to_string() })?;
    Ok(m)
}

pub fn write_fusion(m: &FusionModel) -> String {
    let mut out = String::new();
    write_fusion_into(&mut out, m);
    out
}

pub fn parse_fusion(text: &str) -> Result<FusionModel> {
    let mut cur = Cursor::new(text);
    let m = parse_fusion_from(&mut cur)?;
    trailing(&cur)?;
    Ok(m)
}

pub fn write_cascade(m: &CascadeModel) -> String {
    let mut out = String::from("CASCADE\t1\nthreshold1\t");
    push_value(&mut out, m.threshold1);
    out.push_str("\nthreshold2\t");
    push_value(&mut out, m.threshold2);
    out.push_str("\nstage\t1\n");
    write_fusion_into(&mut out, &m.stage1);
    out.push_str("stage\t2\n");
    write_fusion_into(&mut out, &m.stage2);
    out
}

pub fn parse_cascade(text: &str) -> Result<CascadeModel> {
    let mut cur = Cursor::new(text);
    cur.magic("CASCADE")?;
    let (tline, threshold1) = cur.parsed("threshold1")?;
    let (_, threshold2) = cur.parsed("threshold2")?;
    let stage = |expected: &str, cur: &mut Cursor<'_>| -> Result<FusionModel> {
        let (line, s) = cur.field("stage")?;
        if s != expected {
            return Err(Error::MalformedHeader { line, detail: alloc::format!("expected stage {expected}") });
        }
        parse_fusion_from(cur)
    };
    let stage1 = stage("1", &mut cur)?;
    let stage2 = stage("2", &mut cur)?;
    trailing(&cur)?;
    let m = CascadeModel { stage1, stage2, threshold1, threshold2 };
    m.validate().map_err(|e| Error::MalformedHeader { line: tline, detail: e.to_string() })?;
    Ok(m)
}
