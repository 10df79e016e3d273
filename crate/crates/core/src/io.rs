//! Score bundles and PNG images on disk.
//!
//! A bundle is a directory with `manifest.json` and `scores.bin`. The manifest records
//! `width`, `height`, `class_names`, `dtype` (always `"f32le"`) and `layout` (always
//! `"class-major then row-major"`); `scores.bin` holds the planes back to back as
//! little-endian `f32`.

use crate::error::{Error, Result};
use crate::types::{LabelMap, ScoreStack};
use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCORES_FILE: &str = "scores.bin";
pub const DTYPE: &str = "f32le";
pub const LAYOUT: &str = "class-major then row-major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub width: usize,
    pub height: usize,
    pub class_names: Vec<String>,
    pub dtype: String,
    pub layout: String,
}

pub fn save_bundle(stack: &ScoreStack, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = BundleManifest {
        width: stack.width(),
        height: stack.height(),
        class_names: stack.class_names().to_vec(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let mut bytes = Vec::with_capacity(4 * stack.width() * stack.height() * stack.num_classes());
    for plane in stack.planes() {
        for v in plane {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(dir.join(SCORES_FILE), bytes)?;
    Ok(())
}

/// Writes unconstrained planes (such as variances) in bundle format without range checks.
pub fn save_raw_bundle(width: usize, height: usize, names: &[String], planes: &[Vec<f32>], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = BundleManifest {
        width,
        height,
        class_names: names.to_vec(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let bytes: Vec<u8> = planes.iter().flatten().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(dir.join(SCORES_FILE), bytes)?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<BundleManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let m: BundleManifest = serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    if m.dtype != DTYPE {
        return Err(Error::Manifest(format!("unsupported dtype {:?}", m.dtype)));
    }
    if m.layout != LAYOUT {
        return Err(Error::Manifest(format!("unsupported layout {:?}", m.layout)));
    }
    if m.width == 0 || m.height == 0 || m.class_names.is_empty() {
        return Err(Error::Manifest("width, height and class_names must be non-empty".into()));
    }
    Ok(m)
}

/// Reads the manifest and raw planes without range validation.
pub fn load_raw_bundle(dir: &Path) -> Result<(BundleManifest, Vec<Vec<f32>>)> {
    let m = read_manifest(dir)?;
    let bytes = fs::read(dir.join(SCORES_FILE))?;
    let n = m.width * m.height;
    let expected = 4 * (n * m.class_names.len()) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::BundleSize { expected, actual: bytes.len() as u64 });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let planes = values.chunks(n).map(<[f32]>::to_vec).collect();
    Ok((m, planes))
}

pub fn load_bundle(dir: &Path) -> Result<ScoreStack> {
    let (m, planes) = load_raw_bundle(dir)?;
    ScoreStack::new(m.width, m.height, m.class_names, planes)
}

/// Opens an image, reporting file-system failures as [`Error::Io`].
pub fn open_image(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Image(other),
    })
}

/// One 8-bit grayscale PNG per class; a score is `pixel / 255`.
pub fn load_scores_png(paths: &[impl AsRef<Path>]) -> Result<ScoreStack> {
    if paths.is_empty() {
        return Err(Error::NoClasses);
    }
    let mut planes = Vec::with_capacity(paths.len());
    let mut names = Vec::with_capacity(paths.len());
    let mut dims = None;
    for path in paths {
        let path = path.as_ref();
        let img = open_image(path)?;
        if !matches!(img, image::DynamicImage::ImageLuma8(_)) {
            return Err(Error::InvalidArgument(format!("{} is not an 8-bit grayscale image", path.display())));
        }
        let img = img.into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        match dims {
            None => dims = Some((w, h)),
            Some((ew, eh)) if (ew, eh) != (w, h) => {
                return Err(Error::DimensionMismatch { expected_width: ew, expected_height: eh, width: w, height: h })
            }
            _ => {}
        }
        planes.push(img.as_raw().iter().map(|&p| f32::from(p) / 255.0).collect());
        names.push(path.file_stem().map_or_else(|| format!("class{}", names.len()), |s| s.to_string_lossy().into()));
    }
    let (w, h) = dims.unwrap_or_default();
    ScoreStack::new(w, h, names, planes)
}

/// Label PNG: pixel value = class index, 255 = ignore.
pub fn save_label_png(labels: &LabelMap, path: &Path) -> Result<()> {
    let mut img = GrayImage::new(labels.width() as u32, labels.height() as u32);
    for (j, px) in img.pixels_mut().enumerate() {
        let l = labels.get(j);
        if l > 255 {
            return Err(Error::InvalidArgument(format!("label {l} does not fit in 8 bits")));
        }
        *px = Luma([l as u8]);
    }
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn load_label_png(path: &Path) -> Result<LabelMap> {
    let img = open_image(path)?;
    if !matches!(img, image::DynamicImage::ImageLuma8(_)) {
        return Err(Error::InvalidArgument(format!("{} is not an 8-bit label image", path.display())));
    }
    let img = img.into_luma8();
    LabelMap::new(
        img.width() as usize,
        img.height() as usize,
        img.as_raw().iter().map(|&p| u32::from(p)).collect(),
    )
}
