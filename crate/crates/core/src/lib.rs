//! Flood passability classification.
//!
//! Two pipelines share this crate:
//!
//! * a two-stage cascade (evidence, then passability) over multi-view feature
//!   vectors, fused early, late or both, with one-vs-rest linear SVMs calibrated
//!   to probabilities;
//! * a satellite road-patch pipeline: endpoint-based cropping, flip and
//!   brightness augmentation, RGB-histogram features and the non-passable
//!   tie-break.
//!
//! The crate is `no_std` (it needs `alloc`). Parsing and rendering of the text
//! formats work on `&str`/`String`; file and directory access live in the
//! `floodpass` companion crate.
#![no_std]

extern crate alloc;

pub mod cascade;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod format;
pub mod fusion;
pub mod image;
pub mod metrics;
pub mod multiclass;
pub mod num;
pub mod patch;
pub mod platt;
pub mod protocol;
pub mod svm;
pub mod synthetic;

pub use cascade::{
    predict_cascade, train_cascade, CascadeLabel, CascadeModel, CascadeOutcome, EVIDENCE,
    NON_PASSABLE, NO_EVIDENCE, PASSABLE,
};
pub use dataset::{
    align_views, split_dataset, AlignReport, FeatureMatrix, LabelTable, MultiViewDataset,
    PatchSpec, Point, ScoreMatrix, SplitOutcome,
};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use fusion::{
    double_fuse, early_fuse, late_fuse, predict_fusion, train_fusion, FusionModel,
    FusionStrategy, FusionTag, LateMode,
};
pub use image::{load_ppm, write_ppm, ImageBuffer};
pub use metrics::{confusion, f1, mean_f1, per_class_accuracy, ConfusionCounts, EvalReport};
pub use multiclass::{predict_proba, train_ovr, MulticlassModel};
pub use patch::{augment, classify_patch, extract_patch, rgb_histogram, AugmentPolicy, Flip};
pub use platt::fit_platt;
pub use protocol::{run_protocol, Featurizer, ImageSource, Protocol, ProtocolConfig};
pub use svm::{svm_objective, train_binary_svm, BinarySvm, SvmHyperParams};
