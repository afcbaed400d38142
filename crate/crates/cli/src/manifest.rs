//! Run manifest: every output file with its size and sha256.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub size: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub status: RunStatus,
    pub files: Vec<FileEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

fn slash_path(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

impl Manifest {
    /// Hashes `files` (relative to `root`), sorted by path.
    pub fn build(cfg: &PipelineConfig, root: &Path, files: &[PathBuf], status: RunStatus) -> Result<Self> {
        let mut rels: Vec<&PathBuf> = files.iter().collect();
        rels.sort();
        rels.dedup();
        let files = rels
            .into_iter()
            .map(|rel| {
                let (size, sha256) = sha256_file(&root.join(rel))?;
                Ok(FileEntry {
                    path: slash_path(rel),
                    size,
                    sha256,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: rfscene_core::VERSION.to_string(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            status,
            files,
        })
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        self.write_as(root, MANIFEST)
    }

    pub fn write_as(&self, root: &Path, name: &str) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        let path = root.join(name);
        std::fs::write(&path, s).map_err(|e| CliError::io(&path, e))
    }

    pub fn read(root: &Path) -> Result<Self> {
        Ok(rfscene_core::io::read_json(&root.join(MANIFEST))?)
    }

    /// Paths whose size or hash no longer match the listing.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            match sha256_file(&root.join(&f.path)) {
                Ok((size, hash)) if size == f.size && hash == f.sha256 => {}
                _ => bad.push(f.path.clone()),
            }
        }
        Ok(bad)
    }
}

