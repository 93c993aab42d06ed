//! Dataset acquisition: download the canonical archives (or install them from
//! a local mirror directory), verify pinned SHA-256 checksums, decompress,
//! and write a `manifest.sha256` of the installed files.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use crate::data::DatasetName;
use crate::error::{Error, Result};

/// One downloadable archive and how to turn it into installed files.
struct ArchiveSpec {
    /// File name of the archive at the mirror.
    archive: &'static str,
    /// Pinned SHA-256 of the archive, when one has been independently
    /// verified. `None` means structural validation only.
    sha256: Option<&'static str>,
    install: InstallAction,
}

enum InstallAction {
    /// Gunzip the archive into a single file with this name.
    GunzipTo(&'static str),
    /// Extract all `.bin` members of a .tar.gz into the dataset directory.
    UntarBins,
}

const MNIST_BASE: &str = "https://ossci-datasets.s3.amazonaws.com/mnist/";
const FASHION_BASE: &str = "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/";
const CIFAR_BASE: &str = "https://www.cs.toronto.edu/~kriz/";

const MNIST_ARCHIVES: &[ArchiveSpec] = &[
    ArchiveSpec {
        archive: "train-images-idx3-ubyte.gz",
        sha256: Some("440fcabf73cc546fa21475e81ea370265605f56be210a4024d2ca8f203523609"),
        install: InstallAction::GunzipTo("train-images-idx3-ubyte"),
    },
    ArchiveSpec {
        archive: "train-labels-idx1-ubyte.gz",
        sha256: Some("3552534a0a558bbed6aed32b30c495cca23d567ec52cac8be1a0730e8010255c"),
        install: InstallAction::GunzipTo("train-labels-idx1-ubyte"),
    },
    ArchiveSpec {
        archive: "t10k-images-idx3-ubyte.gz",
        sha256: Some("8d422c7b0a1c1c79245a5bcf07fe86e33eeafee792b84584aec276f5a2dbc4e6"),
        install: InstallAction::GunzipTo("t10k-images-idx3-ubyte"),
    },
    ArchiveSpec {
        archive: "t10k-labels-idx1-ubyte.gz",
        sha256: Some("f7ae60f92e00ec6debd23a6088c31dbd2371eca3ffa0defaefb259924204aec6"),
        install: InstallAction::GunzipTo("t10k-labels-idx1-ubyte"),
    },
];

const FASHION_ARCHIVES: &[ArchiveSpec] = &[
    ArchiveSpec {
        archive: "train-images-idx3-ubyte.gz",
        sha256: Some("3aede38d61863908ad78613f6a32ed271626dd12800ba2636569512369268a84"),
        install: InstallAction::GunzipTo("train-images-idx3-ubyte"),
    },
    ArchiveSpec {
        archive: "train-labels-idx1-ubyte.gz",
        sha256: Some("a04f17134ac03560a47e3764e11b92fc97de4d1bfaf8ba1a3aa29af54cc90845"),
        install: InstallAction::GunzipTo("train-labels-idx1-ubyte"),
    },
    ArchiveSpec {
        archive: "t10k-images-idx3-ubyte.gz",
        sha256: Some("346e55b948d973a97e58d2351dde16a484bd415d4595297633bb08f03db6a073"),
        install: InstallAction::GunzipTo("t10k-images-idx3-ubyte"),
    },
    ArchiveSpec {
        archive: "t10k-labels-idx1-ubyte.gz",
        sha256: Some("67da17c76eaffca5446c3361aaab5c3cd6d1c2608764d35dfb1850b086bf8dd5"),
        install: InstallAction::GunzipTo("t10k-labels-idx1-ubyte"),
    },
];

const CIFAR_ARCHIVES: &[ArchiveSpec] = &[ArchiveSpec {
    archive: "cifar-10-binary.tar.gz",
    // No independently verified digest is pinned for this archive; the
    // loaders validate record structure and counts instead.
    sha256: None,
    install: InstallAction::UntarBins,
}];

fn archives_for(name: DatasetName) -> &'static [ArchiveSpec] {
    match name {
        DatasetName::Mnist => MNIST_ARCHIVES,
        DatasetName::Fashion => FASHION_ARCHIVES,
        DatasetName::Cifar10 => CIFAR_ARCHIVES,
    }
}

fn default_base(name: DatasetName) -> &'static str {
    match name {
        DatasetName::Mnist => MNIST_BASE,
        DatasetName::Fashion => FASHION_BASE,
        DatasetName::Cifar10 => CIFAR_BASE,
    }
}

/// Final on-disk file names for a dataset, relative to its directory.
pub fn required_files(name: DatasetName) -> &'static [&'static str] {
    match name {
        DatasetName::Mnist | DatasetName::Fashion => &[
            "train-images-idx3-ubyte",
            "train-labels-idx1-ubyte",
            "t10k-images-idx3-ubyte",
            "t10k-labels-idx1-ubyte",
        ],
        DatasetName::Cifar10 => &[
            "data_batch_1.bin",
            "data_batch_2.bin",
            "data_batch_3.bin",
            "data_batch_4.bin",
            "data_batch_5.bin",
            "test_batch.bin",
        ],
    }
}

/// Whether every required file for `name` is present under `data_dir`.
pub fn is_installed(name: DatasetName, data_dir: &Path) -> bool {
    let dir = data_dir.join(name.dir_name());
    required_files(name).iter().all(|f| dir.join(f).is_file())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn acquire(source: &str, archive: &str) -> Result<Vec<u8>> {
    let as_dir = Path::new(source);
    if as_dir.is_dir() {
        return Ok(fs::read(as_dir.join(archive))?);
    }
    let url = if source.ends_with('/') {
        format!("{source}{archive}")
    } else {
        format!("{source}/{archive}")
    };
    log::info!("downloading {url}");
    let response = reqwest::blocking::get(&url)?.error_for_status()?;
    Ok(response.bytes()?.to_vec())
}

fn install_archive(bytes: &[u8], spec: &ArchiveSpec, dest_dir: &Path) -> Result<Vec<PathBuf>> {
    if let Some(expected) = spec.sha256 {
        let actual = sha256_hex(bytes);
        if actual != expected {
            return Err(Error::ChecksumMismatch {
                file: spec.archive.to_string(),
                expected: expected.to_string(),
                actual,
            });
        }
    }
    match spec.install {
        InstallAction::GunzipTo(final_name) => {
            let mut decoder = GzDecoder::new(bytes);
            let mut out = Vec::new();
            decoder.read_to_end(&mut out)?;
            let path = dest_dir.join(final_name);
            fs::write(&path, out)?;
            Ok(vec![path])
        }
        InstallAction::UntarBins => {
            let mut installed = Vec::new();
            let mut tar = tar::Archive::new(GzDecoder::new(bytes));
            for entry in tar.entries()? {
                let mut entry = entry?;
                let entry_path = entry.path()?.into_owned();
                let Some(file_name) = entry_path.file_name().map(|f| f.to_owned()) else {
                    continue;
                };
                if file_name.to_string_lossy().ends_with(".bin") {
                    let path = dest_dir.join(file_name);
                    let mut out = Vec::new();
                    entry.read_to_end(&mut out)?;
                    fs::write(&path, out)?;
                    installed.push(path);
                }
            }
            installed.sort();
            Ok(installed)
        }
    }
}

/// Download (or copy from a local mirror directory) every archive of the
/// dataset, verify pinned checksums, install the extracted files under
/// `data_dir/<dataset>/`, and write the directory's `manifest.sha256`.
///
/// `source` overrides the canonical base URL; it may also name a local
/// directory that already holds the archives.
pub fn fetch_dataset(
    name: DatasetName,
    data_dir: &Path,
    source: Option<&str>,
) -> Result<Vec<PathBuf>> {
    let dest_dir = data_dir.join(name.dir_name());
    fs::create_dir_all(&dest_dir)?;
    let source = source.unwrap_or_else(|| default_base(name));
    let mut installed = Vec::new();
    for spec in archives_for(name) {
        let bytes = acquire(source, spec.archive)?;
        installed.extend(install_archive(&bytes, spec, &dest_dir)?);
    }
    write_manifest(&dest_dir)?;
    Ok(installed)
}

/// Write `manifest.sha256` ("<hex>  <name>" lines, sorted by name) covering
/// every regular file in the directory except the manifest itself.
pub fn write_manifest(dir: &Path) -> Result<PathBuf> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.sha256")
        .collect();
    names.sort();
    let mut manifest = String::new();
    for name in &names {
        let digest = sha256_hex(&fs::read(dir.join(name))?);
        manifest.push_str(&format!("{digest}  {name}\n"));
    }
    let path = dir.join("manifest.sha256");
    fs::write(&path, manifest)?;
    Ok(path)
}

/// Recompute the SHA-256 of every file listed in the directory's manifest and
/// fail on the first mismatch or missing file.
pub fn verify_manifest(dir: &Path) -> Result<()> {
    let manifest = fs::read_to_string(dir.join("manifest.sha256"))?;
    for line in manifest.lines() {
        let Some((expected, name)) = line.split_once("  ") else {
            return Err(Error::Config(format!("malformed manifest line {line:?}")));
        };
        let actual = sha256_hex(&fs::read(dir.join(name))?);
        if actual != expected {
            return Err(Error::ChecksumMismatch {
                file: name.to_string(),
                expected: expected.to_string(),
                actual,
            });
        }
    }
    Ok(())
}
