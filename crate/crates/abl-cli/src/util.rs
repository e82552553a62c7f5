//! Small shared helpers: error type, checksums, atomic writes, seeds.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Exit code 1 for usage/config problems, 2 for data problems.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| data(format!("cannot read {}: {}", path.display(), e)))
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written file.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .map_err(|e| data(format!("cannot create {}: {}", dir.display(), e)))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)
        .map_err(|e| data(format!("cannot write {}: {}", tmp.display(), e)))?;
    fs::rename(&tmp, path).map_err(|e| data(format!("cannot rename to {}: {}", path.display(), e)))
}

pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Per-trial seed derived from the master seed; listed in run manifests.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

/// Stream tag separating the corpus-shuffle draws from tie-break draws.
pub const SHUFFLE_TAG: u64 = 0x5348_5546;
