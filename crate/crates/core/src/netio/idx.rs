//! Big-endian IDX files (the MNIST / Fashion-MNIST container), optionally gzipped.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format {
            offset: offset as u64,
            message: "truncated IDX header".into(),
        })
}

/// Parse an IDX3 image file into `(count, rows * cols, pixels / 255)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let dim = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * dim {
        return Err(Error::Format {
            offset: 16,
            message: format!(
                "{count} images of {rows}x{cols} need {} bytes, found {}",
                count * dim,
                body.len()
            ),
        });
    }
    Ok((count, dim, body.iter().map(|&b| b as f32 / 255.0).collect()))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Format {
            offset: 8,
            message: format!("{count} labels declared, {} bytes found", body.len()),
        });
    }
    Ok(body.iter().map(|&b| b as usize).collect())
}

/// Load an image/label IDX pair. `num_classes` is one more than the largest label.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let (count, dim, pixels) = parse_images(&read_maybe_gz(images_path)?).map_err(|e| {
        annotate(e, images_path)
    })?;
    let labels = parse_labels(&read_maybe_gz(labels_path)?).map_err(|e| annotate(e, labels_path))?;
    if labels.len() != count {
        return Err(Error::Validation(format!(
            "{} has {count} images but {} has {} labels",
            images_path.display(),
            labels_path.display(),
            labels.len()
        )));
    }
    let num_classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(
        Array2::from_shape_vec((count, dim), pixels).unwrap(),
        labels,
        num_classes,
    )
}

fn annotate(e: Error, path: &Path) -> Error {
    match e {
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Locate an IDX pair inside `dir`.
///
/// `split` is `"train"` or `"test"`; both the canonical MNIST names
/// (`train-images-idx3-ubyte`, `t10k-labels-idx1-ubyte`, ...) and the bare
/// `images-idx3-ubyte` / `labels-idx1-ubyte` names are accepted, with or
/// without a `.gz` suffix.
pub fn find_idx_pair(dir: impl AsRef<Path>, split: &str) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    let prefixes: &[&str] = match split {
        "train" => &["train-", ""],
        "test" => &["t10k-", "test-", ""],
        other => return Err(Error::Config(format!("unknown split {other:?}"))),
    };
    let find = |stem: &str| -> Option<PathBuf> {
        prefixes.iter().find_map(|p| {
            ["", ".gz"].iter().find_map(|ext| {
                let candidate = dir.join(format!("{p}{stem}{ext}"));
                candidate.is_file().then_some(candidate)
            })
        })
    };
    match (find("images-idx3-ubyte"), find("labels-idx1-ubyte")) {
        (Some(i), Some(l)) => Ok((i, l)),
        _ => Err(Error::Config(format!(
            "no {split} IDX image/label pair in {}",
            dir.display()
        ))),
    }
}
