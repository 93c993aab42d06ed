//! Shared helpers for integration tests: miniature IDX datasets laid out the
//! same way as the real data directory.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn idx_images(rows: u32, cols: u32, images: &[Vec<u8>]) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    buf.extend_from_slice(&(images.len() as u32).to_be_bytes());
    buf.extend_from_slice(&rows.to_be_bytes());
    buf.extend_from_slice(&cols.to_be_bytes());
    for img in images {
        buf.extend_from_slice(img);
    }
    buf
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    buf.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    buf.extend_from_slice(labels);
    buf
}

/// One 8x8 sample per (label, repetition): a bright 4x4 quadrant-ish blob
/// whose position depends on the label, plus seeded noise. Separable enough
/// for smoke-level accuracy checks.
fn synth_image(label: u8, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut img = vec![0u8; 64];
    for v in img.iter_mut() {
        *v = rng.gen_range(0..30);
    }
    let r0 = (label as usize % 4) * 2;
    let c0 = (label as usize / 4) * 3;
    for r in r0..(r0 + 3).min(8) {
        for c in c0..(c0 + 3).min(8) {
            img[r * 8 + c] = 200 + rng.gen_range(0..50);
        }
    }
    img
}

/// Write `mnist/`-layout IDX files of 8x8 synthetic digits under `data_dir`,
/// cycling labels 0..10.
pub fn write_mini_mnist(data_dir: &Path, n_train: usize, n_test: usize, seed: u64) {
    let dir = data_dir.join("mnist");
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut write_split = |prefix: &str, n: usize| {
        let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
        let images: Vec<Vec<u8>> = labels.iter().map(|&l| synth_image(l, &mut rng)).collect();
        File::create(dir.join(format!("{prefix}-images-idx3-ubyte")))
            .unwrap()
            .write_all(&idx_images(8, 8, &images))
            .unwrap();
        File::create(dir.join(format!("{prefix}-labels-idx1-ubyte")))
            .unwrap()
            .write_all(&idx_labels(&labels))
            .unwrap();
    };
    write_split("train", n_train);
    write_split("t10k", n_test);
}

/// Config overrides sizing the model for 8x8 mini images.
pub const MINI_OVERRIDES: &[(&str, &str)] = &[
    ("units", "3,3"),
    ("patch", "4,4"),
    ("stride", "4,4"),
    ("lambda", "50"),
];
