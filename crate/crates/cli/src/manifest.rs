//! Run manifest: the effective config, every derived seed and the hashes of
//! all inputs and outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::failure::{CliResult, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub subject: String,
    pub mode: String,
    /// Seed of the subject's evaluation; fold `k` trains with
    /// `derive_seed(eval_seed, "fold-train", k)` (`"inter-train"` for
    /// inter-session repeats).
    pub eval_seed: u64,
    pub fold_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub seeds: Vec<SeedRecord>,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileHash>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<FileHash> {
    let bytes = std::fs::read(path).map_err(|e| Failure::from(e).context(format!("reading {}", path.display())))?;
    Ok(FileHash { path: path.to_path_buf(), sha256: sha256_hex(&bytes) })
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("manifest {}: {e}", path.display())))
    }

    /// Fails when an input recorded in the manifest has changed on disk.
    pub fn verify_inputs(&self) -> CliResult {
        for input in &self.inputs {
            let now = hash_file(&input.path)?;
            if now.sha256 != input.sha256 {
                return Err(Failure::data(format!(
                    "input {} differs from the manifest (sha256 {} vs {})",
                    input.path.display(),
                    now.sha256,
                    input.sha256
                )));
            }
        }
        Ok(())
    }
}
