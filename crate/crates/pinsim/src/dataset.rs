//! MNIST IDX files and binarization.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use pinsim_core::rbm::BinaryState;

use crate::error::{PinsimError, Result};

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

/// Grayscale images as loaded from IDX.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
    pub split: Split,
}

/// Binary images ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    pub images: Vec<BinaryState>,
    pub labels: Vec<usize>,
    pub split: Split,
}

impl BinaryDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// The first `n` items (or all, if fewer).
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            split: self.split,
        }
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(PinsimError::io(path))?;
    let mut bytes = Vec::new();
    let mut reader = BufReader::new(file);
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(reader).read_to_end(&mut bytes)
    } else {
        reader.read_to_end(&mut bytes)
    }
    .map_err(PinsimError::io(path))?;
    Ok(bytes)
}

fn data_error(path: &Path, reason: impl Into<String>) -> PinsimError {
    PinsimError::Data {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| data_error(path, "truncated header"))
}

fn parse_images(bytes: &[u8], path: &Path) -> Result<(Vec<Vec<u8>>, usize, usize)> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(data_error(
            path,
            format!("bad image magic {magic} (expected {IMAGE_MAGIC})"),
        ));
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * size {
        return Err(data_error(
            path,
            format!("expected {} pixel bytes, found {}", count * size, body.len()),
        ));
    }
    Ok((body.chunks_exact(size.max(1)).map(<[u8]>::to_vec).collect(), rows, cols))
}

fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(data_error(
            path,
            format!("bad label magic {magic} (expected {LABEL_MAGIC})"),
        ));
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(data_error(
            path,
            format!("expected {count} labels, found {}", body.len()),
        ));
    }
    Ok(body.to_vec())
}

/// Loads an IDX image/label pair; `.gz` files are decompressed on the fly.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path, split: Split) -> Result<LabeledDataset> {
    let (images, rows, cols) = parse_images(&read_all(images_path)?, images_path)?;
    let labels = parse_labels(&read_all(labels_path)?, labels_path)?;
    if images.len() != labels.len() {
        return Err(data_error(
            labels_path,
            format!("{} labels for {} images", labels.len(), images.len()),
        ));
    }
    Ok(LabeledDataset {
        images,
        labels,
        rows,
        cols,
        split,
    })
}

/// Finds `<prefix>-images-idx3-ubyte[.gz]` and the matching labels in `dir`.
pub fn locate_split(dir: &Path, split: Split) -> Result<(PathBuf, PathBuf)> {
    let find = |stem: String| -> Result<PathBuf> {
        [stem.clone(), format!("{stem}.gz")]
            .into_iter()
            .map(|name| dir.join(name))
            .find(|p| p.is_file())
            .ok_or_else(|| data_error(&dir.join(&stem), "file not found (plain or .gz)"))
    };
    let p = split.prefix();
    Ok((
        find(format!("{p}-images-idx3-ubyte"))?,
        find(format!("{p}-labels-idx1-ubyte"))?,
    ))
}

pub fn load_split(dir: &Path, split: Split) -> Result<LabeledDataset> {
    let (images, labels) = locate_split(dir, split)?;
    load_mnist_idx(&images, &labels, split)
}

/// Pixel → 1 iff value > `threshold`.
pub fn binarize(dataset: &LabeledDataset, threshold: u8) -> BinaryDataset {
    BinaryDataset {
        images: dataset
            .images
            .iter()
            .map(|img| BinaryState::new(img.iter().map(|&p| u8::from(p > threshold)).collect()).expect("bits are 0/1"))
            .collect(),
        labels: dataset.labels.iter().map(|&l| usize::from(l)).collect(),
        split: dataset.split,
    }
}
