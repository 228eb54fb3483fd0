//! Output files and the run manifest that accompanies them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sdm_core::SdmParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Scenario;
use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Everything needed to reproduce and verify a run. Contains no timestamps,
/// so identical configs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    pub params: SdmParams,
    pub scenario: Scenario,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects output files in one directory and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        log::debug!("wrote {}", path.display());
        self.entries.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn entries(&self) -> &[OutputEntry] {
        &self.entries
    }

    /// Writes the manifest last so that it can list every other file.
    pub fn finish(
        self,
        params: &SdmParams,
        scenario: &Scenario,
        tolerances: BTreeMap<String, f64>,
    ) -> CliResult<Manifest> {
        let manifest = Manifest {
            tool: "sdm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: sdm_core::VERSION.into(),
            command: scenario.name().into(),
            params: *params,
            scenario: scenario.clone(),
            tolerances,
            outputs: self.entries.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        let path = self.root.join(MANIFEST_NAME);
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        Ok(manifest)
    }
}

/// Recomputes every checksum listed in a manifest.
pub fn verify_manifest(root: &Path) -> CliResult<Vec<String>> {
    let path = root.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut mismatched = Vec::new();
    for entry in &manifest.outputs {
        let file = root.join(&entry.file);
        let bytes = std::fs::read(&file).map_err(|source| CliError::Io { path: file, source })?;
        if sha256_hex(&bytes) != entry.sha256 {
            mismatched.push(entry.file.clone());
        }
    }
    Ok(mismatched)
}
