//! IDX-format image and label loading.
//!
//! The format stores a big-endian magic word encoding the element type and
//! rank, the dimension sizes, then raw bytes. Pixels are scaled to [0, 1].

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const IMAGE_MAGIC: u32 = 0x0000_0803; // u8 elements, rank 3
pub const LABEL_MAGIC: u32 = 0x0000_0801; // u8 elements, rank 1
pub const CLASSES: usize = 10;

/// Images flattened one per row, with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImageSet {
    images: Matrix,
    labels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn check_magic(path: &Path, bytes: &[u8], expected: u32) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::IdxLength {
            path: path.to_owned(),
            expected: 4,
            found: bytes.len(),
        });
    }
    let found = be_u32(bytes, 0);
    if found != expected {
        return Err(Error::IdxMagic {
            path: path.to_owned(),
            found,
            expected,
        });
    }
    Ok(())
}

impl LabeledImageSet {
    /// Loads an images file and its matching labels file.
    pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Self> {
        let img_bytes = read_file(images_path)?;
        check_magic(images_path, &img_bytes, IMAGE_MAGIC)?;
        if img_bytes.len() < 16 {
            return Err(Error::IdxLength {
                path: images_path.to_owned(),
                expected: 16,
                found: img_bytes.len(),
            });
        }
        let count = be_u32(&img_bytes, 4) as usize;
        let rows = be_u32(&img_bytes, 8) as usize;
        let cols = be_u32(&img_bytes, 12) as usize;
        let expected = 16 + count * rows * cols;
        if img_bytes.len() != expected {
            return Err(Error::IdxLength {
                path: images_path.to_owned(),
                expected,
                found: img_bytes.len(),
            });
        }

        let lab_bytes = read_file(labels_path)?;
        check_magic(labels_path, &lab_bytes, LABEL_MAGIC)?;
        if lab_bytes.len() < 8 {
            return Err(Error::IdxLength {
                path: labels_path.to_owned(),
                expected: 8,
                found: lab_bytes.len(),
            });
        }
        let lab_count = be_u32(&lab_bytes, 4) as usize;
        if lab_bytes.len() != 8 + lab_count {
            return Err(Error::IdxLength {
                path: labels_path.to_owned(),
                expected: 8 + lab_count,
                found: lab_bytes.len(),
            });
        }
        if lab_count != count {
            return Err(Error::IdxCountMismatch {
                images: count,
                labels: lab_count,
            });
        }

        let dim = rows * cols;
        let pixels: Vec<f64> = img_bytes[16..].iter().map(|&p| p as f64 / 255.0).collect();
        let images = Matrix::from_vec(count, dim, pixels)?;
        let labels = lab_bytes[8..].to_vec();
        LabeledImageSet::from_parts(images, labels)
    }

    /// Wraps already-loaded data; labels must fit the class count.
    pub fn from_parts(images: Matrix, labels: Vec<u8>) -> Result<Self> {
        if images.rows() != labels.len() {
            return Err(Error::IdxCountMismatch {
                images: images.rows(),
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= CLASSES) {
            return Err(Error::InvalidParam {
                name: "labels",
                reason: format!("label {bad} outside 0..{CLASSES}"),
            });
        }
        Ok(LabeledImageSet { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Flattened pixel count per image.
    pub fn image_dim(&self) -> usize {
        self.images.cols()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        self.images.row(i)
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Keeps only the first n examples; n larger than the set is a no-op.
    pub fn truncate(self, n: usize) -> Self {
        if n >= self.len() {
            return self;
        }
        let dim = self.image_dim();
        let mut data = self.images.data().to_vec();
        data.truncate(n * dim);
        LabeledImageSet {
            images: Matrix::from_vec(n, dim, data).expect("truncated dims align"),
            labels: self.labels[..n].to_vec(),
        }
    }
}

pub const TRAIN_IMAGES_FILE: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS_FILE: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES_FILE: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS_FILE: &str = "t10k-labels-idx1-ubyte";

/// Loads the train and test splits from a directory holding the four
/// conventionally named IDX files.
pub fn load_mnist_dir(dir: &Path) -> Result<(LabeledImageSet, LabeledImageSet)> {
    let train = LabeledImageSet::load_idx(
        &dir.join(TRAIN_IMAGES_FILE),
        &dir.join(TRAIN_LABELS_FILE),
    )?;
    let test = LabeledImageSet::load_idx(
        &dir.join(TEST_IMAGES_FILE),
        &dir.join(TEST_LABELS_FILE),
    )?;
    Ok((train, test))
}

/// Standard-basis target vector for a class label.
pub fn one_hot(label: u8, classes: usize) -> Result<Vec<f64>> {
    if label as usize >= classes {
        return Err(Error::InvalidParam {
            name: "label",
            reason: format!("label {label} outside 0..{classes}"),
        });
    }
    let mut v = vec![0.0; classes];
    v[label as usize] = 1.0;
    Ok(v)
}
