//! `floodpass` subcommands.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors. Every
//! command is a pure function of its inputs, flags and seed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use floodpass_core::format::{self, FormatKind};
use floodpass_core::metrics::CASCADE_LABELS;
use floodpass_core::num::{format_value, mix};
use floodpass_core::patch::{augment, extract_patch, AugmentPolicy, Flip};
use floodpass_core::protocol::{histogram_features, load_patch, run_protocol, Featurizer, Protocol, ProtocolConfig};
use floodpass_core::synthetic::{self, BlobConfig};
use floodpass_core::{
    align_views, predict_cascade, predict_fusion, split_dataset, train_cascade, train_fusion, write_ppm, CascadeModel,
    EvalReport, FeatureMatrix, FusionModel, FusionStrategy, FusionTag, LabelTable, LateMode, MultiViewDataset,
    PatchSpec, SvmHyperParams, EVIDENCE, NON_PASSABLE, NO_EVIDENCE, PASSABLE,
};

use crate::files::{self, DirImages};
use crate::pool::Pool;
use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Misuse of flags that clap cannot detect on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "floodpass", version, about = "Flood passability classification from multi-view features and satellite road patches")]
pub struct Cli {
    /// Worker threads for per-view training and per-patch processing
    /// (0 or unset: one per core). Output never depends on it.
    #[arg(long, global = true, env = "FLOODPASS_JOBS", value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check FVEC, LABELS, SCORE, PATCHES, PRED, model and PPM files.
    Validate(ValidateArgs),
    /// Stratified train/test split of the labeled ids shared by all views.
    Split(SplitArgs),
    /// Train a fusion model, or a two-stage cascade with --passability-labels.
    Train(TrainArgs),
    /// Apply a trained model (SCORE output for fusion, PRED for a cascade).
    Predict(PredictArgs),
    /// Score predictions against ground truth (REPORT v1 or JSON).
    Evaluate(EvaluateArgs),
    /// Cut road patches out of their images.
    ExtractPatches(ExtractArgs),
    /// Write the augmented copies of every patch.
    Augment(AugmentCmdArgs),
    /// RGB histogram features of every patch as FVEC.
    Featurize(FeaturizeArgs),
    /// Run the all-train or half-train satellite patch protocol.
    RunFdsi(RunFdsiArgs),
    /// Write the seeded synthetic fixtures.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Files to check; the format is detected from the first record.
    #[arg(required = true, value_name = "FILE")]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Feature views (FVEC), repeat once per view.
    #[arg(long = "features", required = true, num_args = 1.., value_name = "FVEC")]
    pub features: Vec<PathBuf>,
    #[arg(long, value_name = "LABELS")]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.6, value_name = "F")]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives train.labels and test.labels.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Early,
    Late,
    Double,
}

impl From<StrategyArg> for FusionTag {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Early => FusionTag::Early,
            StrategyArg::Late => FusionTag::Late,
            StrategyArg::Double => FusionTag::Double,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LateModeArg {
    MeanProba,
    MajorityVote,
}

#[derive(Debug, Args)]
pub struct SvmArgs {
    /// L2 regularization strength.
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    /// Passes over the training data.
    #[arg(long, default_value_t = 20)]
    pub epochs: u32,
    /// Seed for sampling order, calibration folds, splits and augmentation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SvmArgs {
    fn hyper_params(&self) -> Result<SvmHyperParams> {
        let hp = SvmHyperParams { lambda: self.lambda, epochs: self.epochs, seed: self.seed };
        hp.validate().map_err(|e| usage(e.to_string()))?;
        Ok(hp)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature views (FVEC), repeat once per view; order is kept.
    #[arg(long = "features", required = true, num_args = 1.., value_name = "FVEC")]
    pub features: Vec<PathBuf>,
    /// Class labels; evidence/no_evidence when training a cascade.
    #[arg(long, value_name = "LABELS")]
    pub labels: PathBuf,
    /// Passability labels of evidence-positive ids; trains a cascade.
    #[arg(long, value_name = "LABELS")]
    pub passability_labels: Option<PathBuf>,
    /// Train a cascade from three-way outcome labels (no_evidence,
    /// non_passable, passable) in --labels.
    #[arg(long, conflicts_with = "passability_labels")]
    pub cascade: bool,
    #[arg(long, value_enum, default_value_t = StrategyArg::Double)]
    pub strategy: StrategyArg,
    /// How late fusion combines per-view scores.
    #[arg(long, value_enum, default_value_t = LateModeArg::MeanProba)]
    pub late_mode: LateModeArg,
    /// Concatenate raw view blocks in early fusion (no per-block L2 norm).
    #[arg(long)]
    pub no_block_norm: bool,
    /// Stage-1 evidence probability at or above which stage 2 runs.
    #[arg(long, default_value_t = 0.5)]
    pub threshold1: f64,
    /// Stage-2 passable probability at or above which a sample is passable.
    #[arg(long, default_value_t = 0.5)]
    pub threshold2: f64,
    #[command(flatten)]
    pub svm: SvmArgs,
    #[arg(long, value_name = "MODEL")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    /// Feature views (FVEC); matched to the model's views by name.
    #[arg(long = "features", required = true, num_args = 1.., value_name = "FVEC")]
    pub features: Vec<PathBuf>,
    /// Override the cascade's stage-1 threshold.
    #[arg(long)]
    pub threshold1: Option<f64>,
    /// Override the cascade's stage-2 threshold.
    #[arg(long)]
    pub threshold2: Option<f64>,
    /// Output file (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// PRED (cascade) or SCORE (fusion) file.
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    /// Ground truth labels: three-way outcomes, or evidence labels combined
    /// with --passability-labels.
    #[arg(long, value_name = "LABELS")]
    pub truth: PathBuf,
    #[arg(long, value_name = "LABELS")]
    pub passability_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PatchInput {
    #[arg(long, value_name = "PATCHES")]
    pub patches: PathBuf,
    /// Directory holding `<image_id>.ppm`.
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,
    /// Pixels added around the endpoints' bounding box.
    #[arg(long, default_value_t = floodpass_core::patch::DEFAULT_MARGIN)]
    pub margin: u32,
}

#[derive(Debug, Args)]
pub struct AugmentFlags {
    /// Comma-separated flips (horizontal, vertical, both) or `none`.
    #[arg(long, default_value = "horizontal,vertical", value_parser = parse_flips)]
    pub flips: FlipList,
    /// Brightness factors drawn per patch.
    #[arg(long, default_value_t = 2)]
    pub brightness_samples: u32,
    /// Factor interval `lo,hi` with 0 < lo <= 1 <= hi.
    #[arg(long, default_value = "0.6,1.4", value_parser = parse_range)]
    pub brightness_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipList(pub Vec<Flip>);

fn parse_flips(s: &str) -> std::result::Result<FlipList, String> {
    if s == "none" || s.is_empty() {
        return Ok(FlipList(Vec::new()));
    }
    s.split(',').map(|t| t.trim().parse::<Flip>().map_err(|e| e.to_string())).collect::<Result<_, _>>().map(FlipList)
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("invalid number `{t}`"));
    Ok((p(lo)?, p(hi)?))
}

impl AugmentFlags {
    fn policy(&self, seed: u64) -> Result<AugmentPolicy> {
        let p = AugmentPolicy {
            flips: self.flips.0.clone(),
            brightness_samples: self.brightness_samples,
            brightness_range: self.brightness_range,
            seed,
        };
        p.validate().map_err(|e| usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: PatchInput,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentCmdArgs {
    #[command(flatten)]
    pub input: PatchInput,
    #[command(flatten)]
    pub augment: AugmentFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives `<image_id>_<k>.ppm`; k = 0 is the unmodified patch.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub input: PatchInput,
    /// Histogram bins per channel (must divide 256).
    #[arg(long, default_value_t = floodpass_core::patch::DEFAULT_BINS)]
    pub bins: u32,
    #[arg(long, value_name = "FVEC")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    AllTrain,
    HalfTrain,
}

#[derive(Debug, Args)]
pub struct RunFdsiArgs {
    /// Labeled patches (PATCHES).
    #[arg(long, value_name = "PATCHES")]
    pub patches: PathBuf,
    /// Directory holding `<image_id>.ppm` (not needed with --scores-file).
    #[arg(long, value_name = "DIR")]
    pub images: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: ProtocolArg,
    /// Evaluation patches for all-train (default: the training patches).
    #[arg(long, value_name = "PATCHES")]
    pub test_patches: Option<PathBuf>,
    /// External passable/non_passable probabilities (SCORE) instead of the
    /// built-in histogram classifier.
    #[arg(long, value_name = "SCORE")]
    pub scores_file: Option<PathBuf>,
    /// Histogram bins per channel (must divide 256).
    #[arg(long, default_value_t = floodpass_core::patch::DEFAULT_BINS)]
    pub bins: u32,
    #[arg(long, default_value_t = floodpass_core::patch::DEFAULT_MARGIN)]
    pub margin: u32,
    #[command(flatten)]
    pub augment: AugmentFlags,
    #[command(flatten)]
    pub svm: SvmArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    /// Report file (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Per-patch predicted labels (LABELS).
    #[arg(long, value_name = "LABELS")]
    pub predictions_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub fixture: Fixture,
}

#[derive(Debug, Subcommand)]
pub enum Fixture {
    /// Four-view Gaussian blobs: m1..m4.fvec, evidence.labels,
    /// passability.labels, outcomes.labels.
    Blobs {
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 8.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Dark flooded vs bright dry patches: images/<id>.ppm and patches.txt.
    Patches {
        #[arg(long, default_value_t = 40)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Diagnostics go to standard error.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = match cli.jobs {
        Some(0) | None => Pool::new(0),
        Some(n) => Pool::new(n),
    }
    .map_err(|e| anyhow!("cannot start worker threads: {e}"))?;
    match cli.command {
        Command::Validate(a) => validate(&a),
        Command::Split(a) => split(&a),
        Command::Train(a) => train(&a, &pool),
        Command::Predict(a) => predict(&a, &pool),
        Command::Evaluate(a) => evaluate(&a),
        Command::ExtractPatches(a) => extract(&a),
        Command::Augment(a) => augment_cmd(&a, &pool),
        Command::Featurize(a) => featurize(&a, &pool),
        Command::RunFdsi(a) => run_fdsi(&a, &pool),
        Command::Generate(a) => generate(&a),
    }
}

/// One `# floodpass <command> key=value ...` line on standard error.
fn echo_config(command: &str, pairs: &[(&str, String)]) {
    let mut line = format!("# floodpass {command}");
    for (k, v) in pairs {
        line.push_str(&format!(" {k}={v}"));
    }
    eprintln!("{line}");
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => files::write(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn paths(list: &[PathBuf]) -> String {
    list.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

fn validate(a: &ValidateArgs) -> Result<()> {
    for path in &a.files {
        let bytes = std::fs::read(path).map_err(|e| anyhow!("{}: cannot read ({e})", path.display()))?;
        if bytes.starts_with(b"P6") {
            let img = floodpass_core::load_ppm(&bytes).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            println!("{}\tPPM\twidth={}\theight={}", path.display(), img.width(), img.height());
            continue;
        }
        let text = files::read_text(path)?;
        let kind = format::detect(&text)
            .ok_or_else(|| anyhow!("{}: line 1: unrecognized format", path.display()))?;
        let wrap = |e: floodpass_core::Error| anyhow!("{}: {e}", path.display());
        let summary = match kind {
            FormatKind::Fvec => {
                let m = format::parse_fvec(&text).map_err(wrap)?;
                format!("view={}\tsamples={}\tdim={}", m.view_name(), m.len(), m.dim())
            }
            FormatKind::Labels => {
                let t = format::parse_labels(&text).map_err(wrap)?;
                format!("samples={}\tclasses={}", t.len(), t.classes().join(","))
            }
            FormatKind::Score => {
                let s = format::parse_scores(&text).map_err(wrap)?;
                format!("samples={}\tclasses={}", s.len(), s.classes().join(","))
            }
            FormatKind::Patches => {
                let p = format::parse_patches(&text).map_err(wrap)?;
                let labeled = p.iter().filter(|s| s.label.is_some()).count();
                format!("patches={}\tlabeled={labeled}", p.len())
            }
            FormatKind::Pred => format!("samples={}", format::parse_predictions(&text).map_err(wrap)?.len()),
            FormatKind::Model => {
                let m = format::parse_model(&text).map_err(wrap)?;
                format!("classes={}\tdim={}", m.classes.join(","), m.dim)
            }
            FormatKind::Fusion => {
                let m = format::parse_fusion(&text).map_err(wrap)?;
                format!("strategy={}\tviews={}", m.strategy.tag, m.view_names.join(","))
            }
            FormatKind::Cascade => {
                let m = format::parse_cascade(&text).map_err(wrap)?;
                format!("strategy={}\tviews={}", m.strategy().tag, m.stage1.view_names.join(","))
            }
        };
        println!("{}\t{}\t{summary}", path.display(), kind.magic());
    }
    Ok(())
}

fn read_views(list: &[PathBuf]) -> Result<Vec<FeatureMatrix>> {
    let views = list.iter().map(|p| files::read_fvec(p)).collect::<Result<Vec<_>>>()?;
    let mut names = std::collections::BTreeSet::new();
    for (v, p) in views.iter().zip(list) {
        if !names.insert(v.view_name().to_string()) {
            bail!("{}: view name `{}` used by more than one file", p.display(), v.view_name());
        }
    }
    Ok(views)
}

fn aligned(features: &[PathBuf], labels: &LabelTable) -> Result<MultiViewDataset> {
    let views = read_views(features)?;
    let (d, report) = align_views(&views, labels)?;
    for (view, dropped) in &report.dropped_per_view {
        if *dropped > 0 {
            eprintln!("note: view {view}: {dropped} ids not shared by every view and the labels");
        }
    }
    if report.dropped_labels > 0 {
        eprintln!("note: {} labeled ids missing from some view", report.dropped_labels);
    }
    Ok(d)
}

fn split(a: &SplitArgs) -> Result<()> {
    if !(a.train_fraction > 0.0 && a.train_fraction < 1.0) {
        return Err(usage(format!("--train-fraction must be in (0,1), got {}", a.train_fraction)));
    }
    echo_config(
        "split",
        &[
            ("features", paths(&a.features)),
            ("labels", a.labels.display().to_string()),
            ("train_fraction", format_value(a.train_fraction)),
            ("seed", a.seed.to_string()),
            ("stratified", "true".into()),
        ],
    );
    let labels = files::read_labels(&a.labels)?;
    let d = aligned(&a.features, &labels)?;
    let s = split_dataset(&d, a.train_fraction, a.seed)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    files::create_dir(&a.out_dir)?;
    files::write(&a.out_dir.join("train.labels"), format::write_labels(s.train.labels()))?;
    files::write(&a.out_dir.join("test.labels"), format::write_labels(s.test.labels()))?;
    eprintln!("split: {} train, {} test", s.train.len(), s.test.len());
    Ok(())
}

fn check_threshold(name: &str, t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be in (0,1), got {t}")))
    }
}

fn train(a: &TrainArgs, pool: &Pool) -> Result<()> {
    let hp = a.svm.hyper_params()?;
    check_threshold("threshold1", a.threshold1)?;
    check_threshold("threshold2", a.threshold2)?;
    let strategy = FusionStrategy {
        tag: a.strategy.into(),
        late_mode: match a.late_mode {
            LateModeArg::MeanProba => LateMode::MeanProba,
            LateModeArg::MajorityVote => LateMode::MajorityVote,
        },
        block_norm: !a.no_block_norm,
    };
    echo_config(
        "train",
        &[
            ("features", paths(&a.features)),
            ("labels", a.labels.display().to_string()),
            ("passability_labels", a.passability_labels.as_ref().map_or("-".into(), |p| p.display().to_string())),
            ("cascade", (a.cascade || a.passability_labels.is_some()).to_string()),
            ("strategy", strategy.tag.to_string()),
            ("late_mode", strategy.late_mode.as_str().into()),
            ("block_norm", strategy.block_norm.to_string()),
            ("threshold1", format_value(a.threshold1)),
            ("threshold2", format_value(a.threshold2)),
            ("lambda", format_value(hp.lambda)),
            ("epochs", hp.epochs.to_string()),
            ("seed", hp.seed.to_string()),
        ],
    );
    let labels = files::read_labels(&a.labels)?;
    let stages = match &a.passability_labels {
        Some(p) => Some((labels.clone(), files::read_labels(p)?)),
        None if a.cascade => Some(split_outcomes(&labels).map_err(|e| anyhow!("{}: {e}", a.labels.display()))?),
        None => None,
    };
    let text = match stages {
        Some((evidence, passability)) => {
            let d = aligned(&a.features, &evidence)?;
            let m = train_cascade(&d, &passability, strategy, &hp, pool)?.with_thresholds(a.threshold1, a.threshold2)?;
            eprintln!("train: cascade on {} samples, {} views", d.len(), d.views().len());
            format::write_cascade(&m)
        }
        None => {
            let d = aligned(&a.features, &labels)?;
            let m = train_fusion(&d, strategy, &hp, pool)?;
            eprintln!("train: {} fusion on {} samples, classes {}", strategy.tag, d.len(), m.classes().join(","));
            format::write_fusion(&m)
        }
    };
    files::write(&a.out, text)
}

/// Evidence and passability tables from three-way outcome labels.
fn split_outcomes(outcomes: &LabelTable) -> Result<(LabelTable, LabelTable)> {
    let (mut evidence, mut passability) = (LabelTable::new(), LabelTable::new());
    for (id, l) in outcomes.iter() {
        match l {
            NO_EVIDENCE => evidence.insert(id, NO_EVIDENCE)?,
            PASSABLE | NON_PASSABLE => {
                evidence.insert(id, EVIDENCE)?;
                passability.insert(id, l)?;
            }
            other => bail!("label `{other}` of `{id}` is not a three-way outcome"),
        }
    }
    Ok((evidence, passability))
}

/// Views reordered to `names`, restricted to the ids they all share.
fn views_for(names: &[String], features: &[PathBuf]) -> Result<Vec<FeatureMatrix>> {
    let mut by_name: BTreeMap<String, FeatureMatrix> =
        read_views(features)?.into_iter().map(|v| (v.view_name().to_string(), v)).collect();
    let views = names
        .iter()
        .map(|n| by_name.remove(n).ok_or_else(|| anyhow!("no --features file provides view `{n}`")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(extra) = by_name.keys().next() {
        bail!("view `{extra}` is not used by the model");
    }
    let mut common: std::collections::BTreeSet<&String> = views[0].ids().iter().collect();
    for v in &views[1..] {
        let ids: std::collections::BTreeSet<&String> = v.ids().iter().collect();
        common.retain(|id| ids.contains(id));
    }
    let ids: Vec<String> = common.into_iter().cloned().collect();
    if ids.is_empty() {
        bail!("no id is present in every view");
    }
    views.iter().map(|v| v.select_ids(&ids).map_err(Into::into)).collect()
}

fn predict(a: &PredictArgs, pool: &Pool) -> Result<()> {
    let text = files::read_text(&a.model)?;
    let wrap = |e: floodpass_core::Error| anyhow!("{}: {e}", a.model.display());
    let out = match format::detect(&text) {
        Some(FormatKind::Cascade) => {
            let mut m: CascadeModel = format::parse_cascade(&text).map_err(wrap)?;
            let (t1, t2) = (a.threshold1.unwrap_or(m.threshold1), a.threshold2.unwrap_or(m.threshold2));
            check_threshold("threshold1", t1)?;
            check_threshold("threshold2", t2)?;
            m = m.with_thresholds(t1, t2)?;
            echo_config(
                "predict",
                &[
                    ("model", a.model.display().to_string()),
                    ("features", paths(&a.features)),
                    ("threshold1", format_value(t1)),
                    ("threshold2", format_value(t2)),
                ],
            );
            let views = views_for(&m.stage1.view_names, &a.features)?;
            format::write_predictions(&predict_cascade(&m, &views, pool)?)
        }
        Some(FormatKind::Fusion) => {
            if a.threshold1.is_some() || a.threshold2.is_some() {
                return Err(usage("--threshold1/--threshold2 apply to cascade models only"));
            }
            let m: FusionModel = format::parse_fusion(&text).map_err(wrap)?;
            echo_config("predict", &[("model", a.model.display().to_string()), ("features", paths(&a.features))]);
            let views = views_for(&m.view_names, &a.features)?;
            format::write_scores(&predict_fusion(&m, &views, pool)?)
        }
        _ => bail!("{}: line 1: expected a CASCADE or FUSION model", a.model.display()),
    };
    emit(a.out.as_deref(), &out)
}

/// Three-way truth from evidence labels plus passability labels.
fn outcome_truth(evidence: &LabelTable, passability: &LabelTable) -> Result<LabelTable> {
    let mut out = LabelTable::new();
    for (id, l) in evidence.iter() {
        let v = match l {
            EVIDENCE => passability
                .get(id)
                .ok_or_else(|| anyhow!("evidence-positive id `{id}` has no passability label"))?,
            NO_EVIDENCE => NO_EVIDENCE,
            other => bail!("truth label `{other}` for `{id}` is not evidence/no_evidence"),
        };
        out.insert(id, v)?;
    }
    Ok(out)
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut truth = files::read_labels(&a.truth)?;
    if let Some(p) = &a.passability_labels {
        truth = outcome_truth(&truth, &files::read_labels(p)?)?;
    }
    let text = files::read_text(&a.predictions)?;
    let wrap = |e: floodpass_core::Error| anyhow!("{}: {e}", a.predictions.display());
    let (ids, pred, kind): (Vec<String>, Vec<String>, &str) = match format::detect(&text) {
        Some(FormatKind::Pred) => {
            let p = format::parse_predictions(&text).map_err(wrap)?;
            (p.iter().map(|l| l.id.clone()).collect(), p.iter().map(|l| l.value.as_str().to_string()).collect(), "PRED")
        }
        Some(FormatKind::Score) => {
            let s = format::parse_scores(&text).map_err(wrap)?;
            let labels = s.argmax_labels().into_iter().map(String::from).collect();
            (s.ids().to_vec(), labels, "SCORE")
        }
        _ => bail!("{}: line 1: expected a PRED or SCORE file", a.predictions.display()),
    };
    if ids.is_empty() {
        bail!("{}: no predictions", a.predictions.display());
    }
    // score the ids present in both files
    let (mut pred_col, mut truth_col) = (Vec::with_capacity(ids.len()), Vec::with_capacity(ids.len()));
    for (id, p) in ids.iter().zip(&pred) {
        if let Some(t) = truth.get(id) {
            pred_col.push(p.as_str());
            truth_col.push(t);
        }
    }
    if pred_col.is_empty() {
        bail!("{}: no prediction id has a label in {}", a.predictions.display(), a.truth.display());
    }
    let unscored = ids.len() - pred_col.len();
    if unscored > 0 {
        eprintln!("note: {unscored} predictions have no truth label and are not scored");
    }
    let three_way = pred_col.iter().chain(&truth_col).all(|l| CASCADE_LABELS.contains(l));
    let mut r = if three_way { EvalReport::cascade(&pred_col, &truth_col)? } else { EvalReport::flat(&pred_col, &truth_col)? };
    r.metadata.insert("predictions".into(), a.predictions.display().to_string());
    r.metadata.insert("predictions_format".into(), kind.into());
    r.metadata.insert("truth".into(), a.truth.display().to_string());
    r.metadata.insert("unscored_predictions".into(), unscored.to_string());
    if let Some(p) = &a.passability_labels {
        r.metadata.insert("passability_labels".into(), p.display().to_string());
    }
    if three_way {
        r.metadata.insert("mean_f1_reading".into(), "one_vs_rest_over_three_outcomes".into());
    }
    emit(a.out.as_deref(), &render(&r, a.format))
}

fn render(r: &EvalReport, f: ReportFormat) -> String {
    match f {
        ReportFormat::Text => r.render_text(),
        ReportFormat::Json => report::to_json(r),
    }
}

fn sorted_patches(path: &Path) -> Result<Vec<PatchSpec>> {
    let mut p = files::read_patches(path)?;
    p.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(p)
}

fn extract(a: &ExtractArgs) -> Result<()> {
    let patches = sorted_patches(&a.input.patches)?;
    let images = DirImages::new(&a.input.images);
    echo_config("extract-patches", &[("patches", a.input.patches.display().to_string()), ("margin", a.input.margin.to_string())]);
    files::create_dir(&a.out_dir)?;
    for spec in &patches {
        let patch = load_patch(&images, spec, a.input.margin).map_err(|e| anyhow!("patch `{}`: {e}", spec.image_id))?;
        files::write(&a.out_dir.join(format!("{}.ppm", spec.image_id)), write_ppm(&patch))?;
    }
    eprintln!("extract-patches: {} patches", patches.len());
    Ok(())
}

fn augment_cmd(a: &AugmentCmdArgs, pool: &Pool) -> Result<()> {
    let policy = a.augment.policy(a.seed)?;
    let patches = sorted_patches(&a.input.patches)?;
    let images = DirImages::new(&a.input.images);
    echo_config(
        "augment",
        &[
            ("patches", a.input.patches.display().to_string()),
            ("margin", a.input.margin.to_string()),
            ("flips", policy.flips.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")),
            ("brightness_samples", policy.brightness_samples.to_string()),
            ("brightness_range", format!("{},{}", format_value(policy.brightness_range.0), format_value(policy.brightness_range.1))),
            ("seed", a.seed.to_string()),
        ],
    );
    files::create_dir(&a.out_dir)?;
    let jobs: Vec<(usize, &PatchSpec)> = patches.iter().enumerate().collect();
    let results = floodpass_core::Executor::map(pool, jobs, |(i, spec)| -> Result<Vec<Vec<u8>>> {
        let patch = extract_patch(&floodpass_core::ImageSource::image(&images, &spec.image_id)?, spec, a.input.margin)
            .map_err(|e| anyhow!("patch `{}`: {e}", spec.image_id))?;
        let p = AugmentPolicy { seed: mix(&[policy.seed, i as u64]), ..policy.clone() };
        Ok(augment(&patch, &p)?.iter().map(write_ppm).collect())
    });
    let mut written = 0;
    for (spec, r) in patches.iter().zip(results) {
        for (k, bytes) in r?.into_iter().enumerate() {
            files::write(&a.out_dir.join(format!("{}_{k}.ppm", spec.image_id)), bytes)?;
            written += 1;
        }
    }
    eprintln!("augment: {written} images from {} patches", patches.len());
    Ok(())
}

fn featurize(a: &FeaturizeArgs, pool: &Pool) -> Result<()> {
    let patches = sorted_patches(&a.input.patches)?;
    let images = DirImages::new(&a.input.images);
    echo_config(
        "featurize",
        &[
            ("patches", a.input.patches.display().to_string()),
            ("margin", a.input.margin.to_string()),
            ("bins", a.bins.to_string()),
        ],
    );
    if a.bins == 0 || a.bins > 256 || 256 % a.bins != 0 {
        return Err(usage(format!("--bins must divide 256, got {}", a.bins)));
    }
    let refs: Vec<&PatchSpec> = patches.iter().collect();
    let x = histogram_features(&refs, &images, a.input.margin, a.bins, None, pool)?;
    files::write(&a.out, format::write_fvec(&x))
}

fn run_fdsi(a: &RunFdsiArgs, pool: &Pool) -> Result<()> {
    let hp = a.svm.hyper_params()?;
    let protocol = match a.protocol {
        ProtocolArg::AllTrain => Protocol::AllTrain,
        ProtocolArg::HalfTrain => Protocol::HalfTrain,
    };
    if a.test_patches.is_some() && protocol == Protocol::HalfTrain {
        return Err(usage("--test-patches applies to --protocol all-train only"));
    }
    if a.scores_file.is_none() && a.images.is_none() {
        return Err(usage("--images is required unless --scores-file is given"));
    }
    if a.bins == 0 || a.bins > 256 || 256 % a.bins != 0 {
        return Err(usage(format!("--bins must divide 256, got {}", a.bins)));
    }
    let cfg = ProtocolConfig { protocol, margin: a.margin, augment: a.augment.policy(hp.seed)?, hyper_params: hp, seed: hp.seed };
    let patches = files::read_patches(&a.patches)?;
    let test = a.test_patches.as_deref().map(files::read_patches).transpose()?;
    let featurizer = match &a.scores_file {
        Some(p) => Featurizer::Scores(files::read_scores(p)?),
        None => Featurizer::Histogram { bins: a.bins },
    };
    let images: Box<dyn floodpass_core::ImageSource> = match &a.images {
        Some(dir) => Box::new(DirImages::new(dir)),
        None => Box::new(BTreeMap::new()),
    };
    echo_config("run-fdsi", &[("protocol", protocol.as_str().into()), ("seed", hp.seed.to_string())]);
    let mut run = run_protocol(&patches, test.as_deref(), images.as_ref(), &featurizer, &cfg, pool)?;
    let meta = &mut run.report.metadata;
    meta.insert("patches".into(), a.patches.display().to_string());
    if let Some(t) = &a.test_patches {
        meta.insert("test_patches".into(), t.display().to_string());
    }
    if let Some(s) = &a.scores_file {
        meta.insert("scores_file".into(), s.display().to_string());
    }
    meta.insert("tie_break".into(), "non_passable".into());
    if let Some(p) = &a.predictions_out {
        let table: LabelTable = run.predictions.iter().map(|(id, l)| (id.clone(), *l)).collect();
        files::write(p, format::write_labels(&table))?;
    }
    emit(a.out.as_deref(), &render(&run.report, a.format))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    match &a.fixture {
        Fixture::Blobs { samples, separation, noise, seed, out_dir } => {
            if *samples < 10 || noise.is_nan() || *noise < 0.0 || separation.is_nan() || *separation <= 0.0 {
                return Err(usage("need --samples >= 10, --noise >= 0 and --separation > 0"));
            }
            let f = synthetic::blobs(&BlobConfig {
                samples: *samples,
                separation: *separation,
                noise: *noise,
                seed: *seed,
                ..BlobConfig::default()
            });
            files::create_dir(out_dir)?;
            for v in &f.views {
                files::write(&out_dir.join(format!("{}.fvec", v.view_name())), format::write_fvec(v))?;
            }
            files::write(&out_dir.join("evidence.labels"), format::write_labels(&f.evidence))?;
            files::write(&out_dir.join("passability.labels"), format::write_labels(&f.passability))?;
            files::write(&out_dir.join("outcomes.labels"), format::write_labels(&f.outcomes))?;
        }
        Fixture::Patches { per_class, seed, out_dir } => {
            if *per_class == 0 {
                return Err(usage("--per-class must be positive"));
            }
            let f = synthetic::patches(*per_class, *seed);
            let dir = out_dir.join("images");
            files::create_dir(&dir)?;
            for (id, img) in &f.images {
                files::write(&dir.join(format!("{id}.ppm")), write_ppm(img))?;
            }
            files::write(&out_dir.join("patches.txt"), format::write_patches(&f.patches))?;
        }
    }
    Ok(())
}
