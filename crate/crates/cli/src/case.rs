//! Case directories and manifests.
//!
//! A case directory holds `gt`, `sens`, `mask` and `kspace` containers plus
//! `manifest.txt`. Reconstructions go to `recon/<name>/` inside it.

use std::fs;
use std::path::{Path, PathBuf};

use pcsmri::container::{self, DType};
use pcsmri::phantom::Case;
use pcsmri::{ComplexImage, MultiCoilKSpace, SamplingMask, SensitivitySet};

use crate::error::{CliError, CliResult};

pub const GT: &str = "gt";
pub const SENS: &str = "sens";
pub const MASK: &str = "mask";
pub const KSPACE: &str = "kspace";
pub const MANIFEST: &str = "manifest.txt";
pub const RECON_DIR: &str = "recon";
pub const RECON: &str = "recon";

/// Ordered `key = value` record of how an artifact was produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", format!("pcsmri {}", env!("CARGO_PKG_VERSION")));
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            entries: container::parse_key_values(&text, path)?,
        })
    }
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Sidecar manifest path for a single-file artifact: `dir/x` -> `dir/x.manifest`.
pub fn manifest_for(stem: &Path) -> PathBuf {
    stem.with_extension("manifest")
}

/// Data file of the artifact `name` inside `dir`.
pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    container::data_path(&dir.join(name))
}

pub fn write_case(dir: &Path, case: &Case, manifest: &Manifest, dtype: DType) -> CliResult<()> {
    create_dir(dir)?;
    container::write_image(&artifact(dir, GT), "image", &case.gt, dtype)?;
    container::write_sens(&artifact(dir, SENS), &case.sens, dtype)?;
    container::write_mask(&artifact(dir, MASK), &case.mask)?;
    container::write_kspace(&artifact(dir, KSPACE), &case.kspace, dtype)?;
    manifest.write(&dir.join(MANIFEST))
}

/// Inputs read back from a case directory.
#[derive(Debug, Clone)]
pub struct LoadedCase {
    pub dir: PathBuf,
    pub name: String,
    pub kspace: MultiCoilKSpace,
    pub mask: SamplingMask,
    pub sens: Option<SensitivitySet>,
    pub gt: Option<ComplexImage>,
}

fn exists(dir: &Path, name: &str) -> bool {
    artifact(dir, name).exists()
}

/// Case name: the manifest's `name` entry, else the directory name.
pub fn case_name(dir: &Path) -> String {
    Manifest::read(&dir.join(MANIFEST))
        .ok()
        .and_then(|m| m.get("name").map(String::from))
        .unwrap_or_else(|| {
            dir.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "case".into())
        })
}

pub fn load_case(dir: &Path, need_sens: bool) -> CliResult<LoadedCase> {
    if !dir.is_dir() {
        return Err(CliError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "case directory not found"),
        ));
    }
    let kspace = container::read_kspace(&artifact(dir, KSPACE))?;
    let mask = container::read_mask(&artifact(dir, MASK))?;
    let sens = if need_sens || exists(dir, SENS) {
        Some(container::read_sens(&artifact(dir, SENS))?)
    } else {
        None
    };
    let gt = if exists(dir, GT) {
        Some(container::read_image(&artifact(dir, GT))?)
    } else {
        None
    };
    Ok(LoadedCase {
        dir: dir.to_path_buf(),
        name: case_name(dir),
        kspace,
        mask,
        sens,
        gt,
    })
}
