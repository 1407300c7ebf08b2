//! Artifact writing: CSV tables, JSON summaries and run manifests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Writes `rows` as CSV with a header row.
pub fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactDigest {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest_file(dir: &Path, name: &str) -> Result<ArtifactDigest> {
    let data = fs::read(dir.join(name))?;
    Ok(ArtifactDigest { file: name.to_string(), bytes: data.len() as u64, sha256: sha256_hex(&data) })
}

/// Everything needed to rerun and check a command's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    /// Fully resolved configuration tree.
    pub config: serde_json::Value,
    pub files: Vec<ArtifactDigest>,
}

impl RunManifest {
    /// Digests `files` (relative to `dir`) and writes `manifest.json` there.
    pub fn write(dir: &Path, command: &str, master_seed: u64, config: serde_json::Value, files: &[&str]) -> Result<Self> {
        let files = files.iter().map(|f| digest_file(dir, f)).collect::<Result<_>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed,
            config,
            files,
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}
