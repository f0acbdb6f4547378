//! Provenance block embedded in every JSON report.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<InputFile>,
    /// Options that shape the output, after defaults were applied.
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub version: String,
    /// The only field allowed to differ between two runs of the same manifest.
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input paths are recorded relative to this directory when set.
    #[serde(skip)]
    pub base: Option<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        // serde_json maps are ordered, so this text is canonical
        let config_sha256 = sha256_hex(config.to_string().as_bytes());
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            config,
            config_sha256,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed,
            base: None,
        }
    }

    pub fn record(&mut self, path: &Path, contents: &[u8]) {
        let shown = self
            .base
            .as_deref()
            .and_then(|b| path.strip_prefix(b).ok())
            .unwrap_or(path);
        self.inputs.push(InputFile {
            path: shown.display().to_string(),
            sha256: sha256_hex(contents),
        });
    }

    /// Read a file and record it as an input.
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.record(path, text.as_bytes());
        Ok(text)
    }
}
