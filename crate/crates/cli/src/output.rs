//! Files written under the output directory, and the run manifest.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Kind, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<ArtifactRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Artifacts {
    /// Renders into memory, writes `dir/name` and records its checksum.
    pub fn write(&mut self, dir: &Path, name: &str, render: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| CliError::io(&path, e))?;
        std::fs::write(&path, &buf).map_err(|e| CliError::io(&path, e))?;
        self.files.push(ArtifactRecord { file: name.to_string(), bytes: buf.len(), sha256: sha256_hex(&buf) });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotStat {
    pub t: f64,
    pub file: String,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub kind: Kind,
    pub name: &'a str,
    pub config: &'a RunConfig,
    pub config_sha256: String,
    pub wall_time_s: f64,
    pub artifacts: &'a [ArtifactRecord],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<SnapshotStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_cells: Option<usize>,
}

pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(serde_json::to_string(config).expect("config serializes").as_bytes())
}

pub fn write_manifest(dir: &Path, manifest: &Manifest<'_>) -> Result<()> {
    let path = dir.join("run.json");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn records_what_was_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.write(dir.path(), "x.csv", |w| {
            use std::io::Write;
            writeln!(w, "a,b")
        })
        .unwrap();
        assert_eq!(std::fs::read(dir.path().join("x.csv")).unwrap(), b"a,b\n");
        assert_eq!(a.files[0].bytes, 4);
        assert_eq!(a.files[0].sha256, sha256_hex(b"a,b\n"));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.grid = 46;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
