//! Reading and writing the text formats and PPM images on disk. Errors name
//! the file; parse errors also carry the line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use floodpass_core::{format, image, Error, FeatureMatrix, ImageBuffer, ImageSource, LabelTable, PatchSpec, ScoreMatrix};

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    String::from_utf8(bytes).map_err(|e| anyhow!("{}: not UTF-8 text ({e})", path.display()))
}

/// Reads `path` and parses it with `parse`, prefixing errors with the path.
pub fn parse_file<T>(path: &Path, parse: impl FnOnce(&str) -> floodpass_core::Result<T>) -> Result<T> {
    let text = read_text(path)?;
    parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn read_fvec(path: &Path) -> Result<FeatureMatrix> {
    parse_file(path, format::parse_fvec)
}

pub fn read_labels(path: &Path) -> Result<LabelTable> {
    parse_file(path, format::parse_labels)
}

pub fn read_scores(path: &Path) -> Result<ScoreMatrix> {
    parse_file(path, format::parse_scores)
}

pub fn read_patches(path: &Path) -> Result<Vec<PatchSpec>> {
    parse_file(path, format::parse_patches)
}

pub fn read_ppm(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    image::load_ppm(&bytes).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("{}: cannot write", path.display()))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("{}: cannot create directory", path.display()))
}

/// Images stored as `<image_id>.ppm` in one directory.
#[derive(Debug, Clone)]
pub struct DirImages {
    root: PathBuf,
}

impl DirImages {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path_of(&self, image_id: &str) -> PathBuf {
        self.root.join(format!("{image_id}.ppm"))
    }
}

impl ImageSource for DirImages {
    fn image(&self, image_id: &str) -> floodpass_core::Result<ImageBuffer> {
        if image_id.contains(['/', '\\']) || image_id == ".." {
            return Err(Error::MissingImage(image_id.into()));
        }
        let path = self.path_of(image_id);
        let bytes = fs::read(&path).map_err(|_| Error::MissingImage(path.display().to_string()))?;
        image::load_ppm(&bytes).map_err(|e| Error::UnsupportedFormat(format!("{}: {e}", path.display())))
    }
}
