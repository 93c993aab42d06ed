//! Dataset ingestion: IDX image/label files, CIFAR-10 binary batches with
//! grayscale conversion, and the in-memory labeled-dataset container.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Labels are digits/classes 0-9 for every supported dataset.
pub const N_LABELS: usize = 10;

const CIFAR_RECORD_BYTES: u64 = 3073;
const CIFAR_SIDE: usize = 32;
const CIFAR_PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;

// ITU-R BT.601 luma coefficients for grayscale conversion.
const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// The three supported benchmark datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Mnist,
    Fashion,
    Cifar10,
}

impl DatasetName {
    /// Directory name under the data root.
    pub fn dir_name(&self) -> &'static str {
        match self {
            DatasetName::Mnist => "mnist",
            DatasetName::Fashion => "fashion",
            DatasetName::Cifar10 => "cifar10",
        }
    }

    /// Image side length after loading (CIFAR-10 is grayscale 32x32).
    pub fn image_side(&self) -> usize {
        match self {
            DatasetName::Mnist | DatasetName::Fashion => 28,
            DatasetName::Cifar10 => 32,
        }
    }
}

impl std::fmt::Display for DatasetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl std::str::FromStr for DatasetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetName::Mnist),
            "fashion" | "mnist-fashion" | "fashion-mnist" => Ok(DatasetName::Fashion),
            "cifar10" | "cifar-10" => Ok(DatasetName::Cifar10),
            other => Err(Error::InvalidParameter(format!(
                "unknown dataset {other:?} (expected mnist, fashion, or cifar10)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// Immutable in-memory dataset: same-shaped images with values in [0, 1]
/// stored row-major in one flat buffer, plus one label per image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub split: Split,
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn from_parts(
        name: impl Into<String>,
        split: Split,
        rows: usize,
        cols: usize,
        pixels: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "image dimensions must be positive".into(),
            ));
        }
        if pixels.len() != labels.len() * rows * cols {
            return Err(Error::CountMismatch {
                images: pixels.len() / (rows * cols),
                labels: labels.len(),
            });
        }
        if !pixels.iter().all(|p| (0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(
                "pixel values must lie in [0, 1]".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= N_LABELS) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                n_labels: N_LABELS,
            });
        }
        Ok(LabeledDataset {
            name: name.into(),
            split,
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn image_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let n = self.image_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Deterministic permutation of the dataset under `seed`; image-label
    /// pairing is preserved.
    pub fn shuffled(&self, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng);
        let mut pixels = Vec::with_capacity(self.pixels.len());
        let mut labels = Vec::with_capacity(self.labels.len());
        for &i in &order {
            pixels.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset {
            name: self.name.clone(),
            split: self.split,
            rows: self.rows,
            cols: self.cols,
            pixels,
            labels,
        }
    }
}

fn read_u32_be<R: Read>(reader: &mut R, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf).map_err(|_| Error::Truncated {
        path: path.to_path_buf(),
        needed: 4,
        got: 0,
    })?;
    Ok(u32::from_be_bytes(buf))
}

fn read_exact_or_truncated<R: Read>(reader: &mut R, buf: &mut [u8], path: &Path) -> Result<()> {
    let needed = buf.len() as u64;
    let mut filled = 0usize;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..])? {
            0 => {
                return Err(Error::Truncated {
                    path: path.to_path_buf(),
                    needed,
                    got: filled as u64,
                })
            }
            n => filled += n,
        }
    }
    Ok(())
}

fn expect_eof<R: Read>(reader: &mut R, path: &Path, expected: u64) -> Result<()> {
    let mut probe = [0u8; 1];
    if reader.read(&mut probe)? != 0 {
        return Err(Error::BadRecordSize {
            path: path.to_path_buf(),
            len: expected + 1,
            record: expected,
        });
    }
    Ok(())
}

/// Load a big-endian IDX image file plus its IDX label file. Pixel bytes are
/// scaled to [0, 1] by dividing by 255; counts are cross-checked between the
/// two files.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let mut ir = BufReader::new(File::open(images_path)?);
    let magic = read_u32_be(&mut ir, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::BadMagic {
            path: images_path.to_path_buf(),
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let n_images = read_u32_be(&mut ir, images_path)? as usize;
    let rows = read_u32_be(&mut ir, images_path)? as usize;
    let cols = read_u32_be(&mut ir, images_path)? as usize;
    let mut raw = vec![0u8; n_images * rows * cols];
    read_exact_or_truncated(&mut ir, &mut raw, images_path)?;
    expect_eof(&mut ir, images_path, raw.len() as u64 + 16)?;

    let mut lr = BufReader::new(File::open(labels_path)?);
    let magic = read_u32_be(&mut lr, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::BadMagic {
            path: labels_path.to_path_buf(),
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let n_labels = read_u32_be(&mut lr, labels_path)? as usize;
    if n_labels != n_images {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let mut raw_labels = vec![0u8; n_labels];
    read_exact_or_truncated(&mut lr, &mut raw_labels, labels_path)?;
    expect_eof(&mut lr, labels_path, raw_labels.len() as u64 + 8)?;

    let pixels = raw.iter().map(|&b| b as f64 / 255.0).collect();
    let labels = raw_labels.iter().map(|&b| b as usize).collect();
    let name = images_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    LabeledDataset::from_parts(name, Split::Train, rows, cols, pixels, labels)
}

/// Load CIFAR-10 binary batches: 3073-byte records of one label byte followed
/// by 1024-byte R/G/B planes. Records are converted to grayscale with the
/// BT.601 luma weights and scaled to [0, 1].
pub fn load_cifar10(batch_paths: &[PathBuf]) -> Result<LabeledDataset> {
    let mut pixels: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for path in batch_paths {
        let len = std::fs::metadata(path)?.len();
        if len == 0 || len % CIFAR_RECORD_BYTES != 0 {
            return Err(Error::BadRecordSize {
                path: path.clone(),
                len,
                record: CIFAR_RECORD_BYTES,
            });
        }
        let mut reader = BufReader::new(File::open(path)?);
        let mut record = vec![0u8; CIFAR_RECORD_BYTES as usize];
        for _ in 0..len / CIFAR_RECORD_BYTES {
            read_exact_or_truncated(&mut reader, &mut record, path)?;
            let label = record[0] as usize;
            if label >= N_LABELS {
                return Err(Error::LabelOutOfRange {
                    label,
                    n_labels: N_LABELS,
                });
            }
            labels.push(label);
            let (r_plane, rest) = record[1..].split_at(CIFAR_PLANE);
            let (g_plane, b_plane) = rest.split_at(CIFAR_PLANE);
            pixels.extend(
                r_plane
                    .iter()
                    .zip(g_plane)
                    .zip(b_plane)
                    .map(|((&r, &g), &b)| {
                        (LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64) / 255.0
                    }),
            );
        }
    }
    LabeledDataset::from_parts("cifar10", Split::Train, CIFAR_SIDE, CIFAR_SIDE, pixels, labels)
}

/// Load a dataset split from its standard location under `data_dir`
/// (`data_dir/<dataset>/...` as laid out by the fetch helper).
pub fn load_dataset(name: DatasetName, data_dir: &Path, split: Split) -> Result<LabeledDataset> {
    let dir = data_dir.join(name.dir_name());
    let mut ds = match name {
        DatasetName::Mnist | DatasetName::Fashion => {
            let prefix = match split {
                Split::Train => "train",
                Split::Test => "t10k",
            };
            load_idx(
                &dir.join(format!("{prefix}-images-idx3-ubyte")),
                &dir.join(format!("{prefix}-labels-idx1-ubyte")),
            )?
        }
        DatasetName::Cifar10 => {
            let batches: Vec<PathBuf> = match split {
                Split::Train => (1..=5)
                    .map(|i| dir.join(format!("data_batch_{i}.bin")))
                    .collect(),
                Split::Test => vec![dir.join("test_batch.bin")],
            };
            load_cifar10(&batches)?
        }
    };
    ds.name = name.dir_name().to_string();
    ds.split = split;
    Ok(ds)
}
