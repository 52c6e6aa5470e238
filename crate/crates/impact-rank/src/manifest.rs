//! Run manifests written next to every artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// SHA-256 of the canonical JSON of the subcommand's settings.
    pub config_hash: String,
    /// SHA-256 of the canonical corpus image, when a corpus was read or written.
    pub corpus_hash: Option<String>,
    pub seed: u64,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: u64,
    /// SHA-256 of each output file.
    pub outputs: BTreeMap<String, String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("serializable config");
    sha256_hex(value.to_string().as_bytes())
}

impl RunManifest {
    pub fn start<T: Serialize>(command_line: Vec<String>, config: &T, seed: u64) -> Self {
        Self {
            command_line,
            config_hash: config_hash(config),
            corpus_hash: None,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_at: unix_now(),
            finished_at: 0,
            outputs: BTreeMap::new(),
        }
    }

    /// Hashes `path`; directories contribute each contained file.
    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && !is_manifest(p))
                .collect();
            entries.sort();
            for p in entries {
                self.record_output(&p)?;
            }
            return Ok(());
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.outputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Writes the manifest beside `primary` and returns its path.
    pub fn finish(mut self, primary: &Path) -> Result<PathBuf> {
        self.finished_at = unix_now();
        let path = manifest_path(primary);
        crate::output::write_json(&path, &self)?;
        Ok(path)
    }
}

fn is_manifest(p: &Path) -> bool {
    p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("manifest.json"))
}

/// `out.csv` -> `out.csv.manifest.json`; a directory gets `manifest.json` inside.
pub fn manifest_path(primary: &Path) -> PathBuf {
    if primary.is_dir() {
        return primary.join("manifest.json");
    }
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}
