//! Run manifests: inputs, seeds, and SHA-256 digests of every output file.
//! Re-executing a config must digest-match every output.

use lvbench::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
    pub failures: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(experiment: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            experiment: experiment.to_string(),
            seed,
            config,
            outputs: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Digests a freshly written output file (path relative to `run_dir`).
    pub fn record_output(&mut self, run_dir: &Path, rel: &str) -> Result<()> {
        let digest = sha256_file(&run_dir.join(rel))?;
        self.outputs.push(OutputRecord {
            path: rel.to_string(),
            sha256: digest,
        });
        Ok(())
    }

    pub fn record_failure(&mut self, stage: &str, error: impl std::fmt::Display) {
        self.failures.push(format!("{stage}: {error}"));
    }

    pub fn write(&self, run_dir: &Path) -> Result<PathBuf> {
        let path = run_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Output digests keyed by relative path, for rerun comparisons.
    pub fn digest_map(&self) -> std::collections::BTreeMap<String, String> {
        self.outputs
            .iter()
            .map(|o| (o.path.clone(), o.sha256.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
