use std::path::Path;

use anyhow::Result;
use eitsim::config::{AtomDoc, CellDoc};
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::commands::{input_error, sha256_hex, FileDigest};

pub const MANIFEST_NAME: &str = "manifest.json";

/// What a run was asked to do and what it produced. Replaying it
/// reproduces every artifact byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
    pub subcommand: String,
    pub params: Command,
    pub atom_preset: String,
    /// The cell flag as given: a preset name or a file path.
    pub cell_arg: Option<String>,
    /// The cell document the run used; replay reads this, not `cell_arg`.
    pub cell_doc: Option<CellDoc>,
    pub atom: AtomDoc,
    pub cell: Option<CellDoc>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn digests(artifacts: &[(String, Vec<u8>)]) -> Vec<FileDigest> {
    artifacts
        .iter()
        .map(|(name, bytes)| FileDigest {
            path: name.clone(),
            sha256: sha256_hex(bytes),
        })
        .collect()
}

pub fn load(path: &Path) -> Result<(RunManifest, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let m: RunManifest = serde_json::from_slice(&bytes)
        .map_err(|e| input_error(format!("{}: not a run manifest: {e}", path.display())))?;
    Ok((m, bytes))
}

/// Fails when an input file no longer matches its recorded digest.
pub fn check_inputs(current: &[FileDigest], recorded: &[FileDigest]) -> Result<()> {
    for (now, then) in current.iter().zip(recorded) {
        if now.sha256 != then.sha256 {
            return Err(input_error(format!(
                "input {} changed since the manifest was written (sha256 {} != {})",
                now.path, now.sha256, then.sha256
            )));
        }
    }
    if current.len() != recorded.len() {
        return Err(input_error("manifest input list does not match the replayed command"));
    }
    Ok(())
}
