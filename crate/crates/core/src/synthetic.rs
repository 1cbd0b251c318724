//! Seeded synthetic fixtures used by the benchmarks, tests and examples.
//!
//! **Multi-view blobs.** `samples` ids `s0000, s0001, ...` receive a three-way
//! outcome: `round(samples * evidence_fraction)` are evidence-positive, and
//! `round(positives * passable_fraction)` of those are passable; the outcome
//! list is shuffled over ids. In every view the outcome classes have centres
//! on three distinct coordinate axes at distance `separation / sqrt(2)` from
//! the origin (pairwise distance `separation`), the axis triple rotating with
//! the view index, and each sample is its class centre plus independent
//! Gaussian noise of standard deviation `noise` in every coordinate of every
//! view.
//!
//! **Satellite patches.** `per_class` images of each passability class, 48x48
//! pixels. Flooded (`non_passable`) images are a dark blue-brown tone
//! `(45, 55, 75)`, dry (`passable`) images a bright sand tone
//! `(175, 165, 145)`; every channel of every pixel gets independent uniform
//! noise in `[-25, 25]`. Road end points are drawn uniformly in the central
//! 32x32 square.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cascade::{CascadeOutcome, EVIDENCE, NON_PASSABLE, NO_EVIDENCE, PASSABLE};
use crate::dataset::{FeatureMatrix, LabelTable, PatchSpec, Point};
use crate::image::ImageBuffer;
use crate::num;

/// Standard normal draw (Box-Muller).
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub samples: usize,
    pub view_dims: Vec<usize>,
    pub separation: f64,
    pub noise: f64,
    pub evidence_fraction: f64,
    pub passable_fraction: f64,
    pub seed: u64,
}

impl Default for BlobConfig {
    /// 400 samples, four views of dims 16, 16, 12 and 8, separation 8, unit
    /// noise, 60% evidence of which 50% passable.
    fn default() -> Self {
        Self {
            samples: 400,
            view_dims: alloc::vec![16, 16, 12, 8],
            separation: 8.0,
            noise: 1.0,
            evidence_fraction: 0.6,
            passable_fraction: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobFixture {
    pub views: Vec<FeatureMatrix>,
    /// `evidence` / `no_evidence` for every id.
    pub evidence: LabelTable,
    /// `passable` / `non_passable` for evidence-positive ids.
    pub passability: LabelTable,
    /// Three-way outcome for every id.
    pub outcomes: LabelTable,
}

/// Multi-view Gaussian blobs (see the module docs). View names are `m1`,
/// `m2`, ...; every view dim must be at least 3.
pub fn blobs(cfg: &BlobConfig) -> BlobFixture {
    assert!(cfg.view_dims.iter().all(|d| *d >= 3), "view dims must be >= 3");
    let mut rng = num::rng(cfg.seed, 0xb10b);
    let n_ev = num::round_half_up(cfg.samples as f64 * cfg.evidence_fraction) as usize;
    let n_pass = num::round_half_up(n_ev as f64 * cfg.passable_fraction) as usize;
    let mut outcomes: Vec<CascadeOutcome> = (0..cfg.samples)
        .map(|i| {
            if i < n_pass {
                CascadeOutcome::Passable
            } else if i < n_ev {
                CascadeOutcome::NonPassable
            } else {
                CascadeOutcome::NoEvidence
            }
        })
        .collect();
    outcomes.shuffle(&mut rng);
    let ids: Vec<String> = (0..cfg.samples).map(|i| alloc::format!("s{i:04}")).collect();

    let radius = cfg.separation / libm::sqrt(2.0);
    let views = cfg
        .view_dims
        .iter()
        .enumerate()
        .map(|(v, &dim)| {
            let mut values = Vec::with_capacity(cfg.samples * dim);
            for o in &outcomes {
                let class = CascadeOutcome::ALL.iter().position(|c| c == o).expect("known");
                let axis = (class + v) % dim;
                for j in 0..dim {
                    let centre = if j == axis { radius } else { 0.0 };
                    values.push(centre + cfg.noise * normal(&mut rng));
                }
            }
            FeatureMatrix::new(alloc::format!("m{}", v + 1), ids.clone(), dim, values).expect("valid fixture")
        })
        .collect();

    let mut evidence = LabelTable::new();
    let mut passability = LabelTable::new();
    let mut outcome_table = LabelTable::new();
    for (id, o) in ids.iter().zip(&outcomes) {
        outcome_table.insert(id.clone(), o.as_str()).expect("token");
        match o {
            CascadeOutcome::NoEvidence => evidence.insert(id.clone(), NO_EVIDENCE),
            _ => {
                passability.insert(id.clone(), o.as_str()).expect("token");
                evidence.insert(id.clone(), EVIDENCE)
            }
        }
        .expect("token");
    }
    BlobFixture { views, evidence, passability, outcomes: outcome_table }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchFixture {
    pub patches: Vec<PatchSpec>,
    pub images: BTreeMap<String, ImageBuffer>,
}

pub const PATCH_IMAGE_SIZE: u32 = 48;

/// Dark flooded vs bright dry satellite patches (see the module docs). Ids
/// are `sat0000, sat0001, ...` with classes interleaved by a seeded shuffle.
pub fn patches(per_class: usize, seed: u64) -> PatchFixture {
    let mut rng = num::rng(seed, 0x5a7);
    let mut labels: Vec<&str> = (0..2 * per_class).map(|i| if i < per_class { NON_PASSABLE } else { PASSABLE }).collect();
    labels.shuffle(&mut rng);
    let size = PATCH_IMAGE_SIZE;
    let mut out = PatchFixture { patches: Vec::new(), images: BTreeMap::new() };
    for (i, label) in labels.into_iter().enumerate() {
        let id = alloc::format!("sat{i:04}");
        let base: [i32; 3] = if label == NON_PASSABLE { [45, 55, 75] } else { [175, 165, 145] };
        let mut px = Vec::with_capacity((size * size * 3) as usize);
        for _ in 0..size * size {
            for b in base {
                px.push((b + rng.random_range(-25..=25)).clamp(0, 255) as u8);
            }
        }
        let mut point = || Point::new(rng.random_range(8..40), rng.random_range(8..40));
        let (p1, p2) = (point(), point());
        out.images.insert(id.clone(), ImageBuffer::new(size, size, px).expect("sized"));
        out.patches.push(PatchSpec { image_id: id, p1, p2, label: Some(label.into()) });
    }
    out
}

/// The fixed 20-point 2-D linearly separable problem used to check the SVM
/// solver: returns row-major points and their `+1`/`-1` targets.
pub fn svm_toy() -> (Vec<f64>, Vec<f64>) {
    const POS: [[f64; 2]; 10] = [
        [2.17, 1.39], [1.58, 0.55], [1.63, 0.95], [1.46, 0.32], [1.78, 0.87],
        [2.89, 0.75], [2.5, 0.98], [2.16, 1.17], [1.64, 0.43], [0.68, 1.37],
    ];
    const NEG: [[f64; 2]; 10] = [
        [-1.16, -1.86], [-1.84, -1.03], [-1.56, -1.07], [-1.05, -1.51], [-1.37, -1.38],
        [-1.24, -1.48], [-1.01, -1.75], [-1.27, -0.63], [-1.55, -1.59], [-1.71, -1.04],
    ];
    let x = POS.iter().chain(&NEG).flatten().copied().collect();
    let y = (0..20).map(|i| if i < 10 { 1.0 } else { -1.0 }).collect();
    (x, y)
}
