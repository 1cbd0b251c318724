//! Road-patch extraction, augmentation, histogram features and the
//! passability decision.

use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use rand::Rng;

use crate::cascade::{NON_PASSABLE, PASSABLE};
use crate::dataset::PatchSpec;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::num;

/// Default margin in pixels around the endpoint bounding box.
pub const DEFAULT_MARGIN: u32 = 25;
/// Default histogram bins per channel.
pub const DEFAULT_BINS: u32 = 16;

/// Crops the endpoints' bounding box grown by `margin` on every side and
/// clipped to the image.
pub fn extract_patch(img: &ImageBuffer, spec: &PatchSpec, margin: u32) -> Result<ImageBuffer> {
    for (name, p) in [("p1", spec.p1), ("p2", spec.p2)] {
        if !img.contains(p.x, p.y) {
            return Err(Error::EndpointOutOfBounds {
                endpoint: name,
                x: p.x,
                y: p.y,
                width: img.width(),
                height: img.height(),
            });
        }
    }
    let x0 = spec.p1.x.min(spec.p2.x).saturating_sub(margin);
    let y0 = spec.p1.y.min(spec.p2.y).saturating_sub(margin);
    let x1 = spec.p1.x.max(spec.p2.x).saturating_add(margin).min(img.width() - 1);
    let y1 = spec.p1.y.max(spec.p2.y).saturating_add(margin).min(img.height() - 1);
    crop(img, x0, y0, x1 - x0 + 1, y1 - y0 + 1)
}

/// Copies the `width` x `height` region whose top-left corner is `(x0, y0)`.
pub fn crop(img: &ImageBuffer, x0: u32, y0: u32, width: u32, height: u32) -> Result<ImageBuffer> {
    let (w, x0, y0) = (img.width() as usize, x0 as usize, y0 as usize);
    let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
    for y in y0..y0 + height as usize {
        let start = (y * w + x0) * 3;
        pixels.extend_from_slice(&img.pixels()[start..start + width as usize * 3]);
    }
    ImageBuffer::new(width, height, pixels)
}

/// Geometric variants produced by augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flip {
    /// Mirror left-right.
    Horizontal,
    /// Mirror top-bottom.
    Vertical,
    /// Both mirrors (a half turn).
    Both,
}

impl Flip {
    pub fn as_str(self) -> &'static str {
        match self {
            Flip::Horizontal => "horizontal",
            Flip::Vertical => "vertical",
            Flip::Both => "both",
        }
    }
}

impl FromStr for Flip {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" | "h" => Ok(Flip::Horizontal),
            "vertical" | "v" => Ok(Flip::Vertical),
            "both" | "hv" => Ok(Flip::Both),
            other => Err(Error::InvalidParameter(alloc::format!("unknown flip `{other}`"))),
        }
    }
}

pub fn flip(img: &ImageBuffer, f: Flip) -> ImageBuffer {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = vec![0u8; img.pixels().len()];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = match f {
                Flip::Horizontal => (w - 1 - x, y),
                Flip::Vertical => (x, h - 1 - y),
                Flip::Both => (w - 1 - x, h - 1 - y),
            };
            let src = (sy * w + sx) * 3;
            out[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&img.pixels()[src..src + 3]);
        }
    }
    ImageBuffer::new(img.width(), img.height(), out).expect("same dimensions")
}

/// Scales every channel: `c -> clamp(floor(c * factor + 0.5), 0, 255)`.
pub fn scale_brightness(img: &ImageBuffer, factor: f64) -> ImageBuffer {
    let pixels = img
        .pixels()
        .iter()
        .map(|&c| libm::floor(c as f64 * factor + 0.5).clamp(0.0, 255.0) as u8)
        .collect();
    ImageBuffer::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Which augmented copies to produce.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPolicy {
    /// Requested flips; duplicates are ignored, order is canonical.
    pub flips: Vec<Flip>,
    /// Brightness factors drawn per patch.
    pub brightness_samples: u32,
    /// Factor interval `(lo, hi)` with `0 < lo <= 1 <= hi`.
    pub brightness_range: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentPolicy {
    /// Horizontal and vertical flips, two brightness draws in `[0.6, 1.4]`.
    fn default() -> Self {
        Self {
            flips: vec![Flip::Horizontal, Flip::Vertical],
            brightness_samples: 2,
            brightness_range: (0.6, 1.4),
            seed: 0,
        }
    }
}

impl AugmentPolicy {
    /// No augmentation: the patch alone.
    pub fn none() -> Self {
        Self { flips: Vec::new(), brightness_samples: 0, brightness_range: (1.0, 1.0), seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.brightness_range;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0 && hi.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "brightness range ({lo}, {hi}) must satisfy 0 < lo <= 1 <= hi"
            )));
        }
        Ok(())
    }

    fn canonical_flips(&self) -> Vec<Flip> {
        let mut f = self.flips.clone();
        f.sort();
        f.dedup();
        f
    }

    /// Number of images [`augment`] returns per patch.
    pub fn multiplier(&self) -> usize {
        (1 + self.canonical_flips().len()) * (1 + self.brightness_samples as usize)
    }

    /// Brightness factors for this policy's seed.
    pub fn factors(&self) -> Vec<f64> {
        let (lo, hi) = self.brightness_range;
        let mut rng = num::rng(self.seed, BRIGHTNESS_STREAM);
        (0..self.brightness_samples)
            .map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) })
            .collect()
    }
}

const BRIGHTNESS_STREAM: u64 = 0xb41e;

/// The patch, its flips, then for each brightness factor a scaled copy of
/// every geometric variant.
pub fn augment(patch: &ImageBuffer, policy: &AugmentPolicy) -> Result<Vec<ImageBuffer>> {
    policy.validate()?;
    let mut geometric = vec![patch.clone()];
    geometric.extend(policy.canonical_flips().into_iter().map(|f| flip(patch, f)));
    let mut out = geometric.clone();
    for factor in policy.factors() {
        out.extend(geometric.iter().map(|g| scale_brightness(g, factor)));
    }
    Ok(out)
}

/// Concatenated per-channel histograms (R, G, B) with `bins` bins each; bin
/// width is `256 / bins`. With `normalize`, each channel block sums to 1.
pub fn rgb_histogram(patch: &ImageBuffer, bins: u32, normalize: bool) -> Result<Vec<f64>> {
    if bins == 0 || bins > 256 || 256 % bins != 0 {
        return Err(Error::InvalidBins(bins));
    }
    let width = 256 / bins as usize;
    let b = bins as usize;
    let mut hist = vec![0.0; 3 * b];
    for px in patch.pixels().chunks_exact(3) {
        for (ch, &v) in px.iter().enumerate() {
            hist[ch * b + v as usize / width] += 1.0;
        }
    }
    if normalize {
        let n = (patch.pixels().len() / 3) as f64;
        hist.iter_mut().for_each(|h| *h /= n);
    }
    Ok(hist)
}

/// Higher probability wins; exact ties are `non_passable`.
pub fn classify_patch(p_passable: f64, p_non_passable: f64) -> &'static str {
    if p_passable > p_non_passable {
        PASSABLE
    } else {
        NON_PASSABLE
    }
}
