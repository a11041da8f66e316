//! Reproducibility envelope written next to every experiment's outputs.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    /// Lowercase hex SHA-256 of the file bytes.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment_name: String,
    pub seed: u64,
    /// Ordered key/value parameters, as given.
    pub parameters: Vec<(String, String)>,
    pub toolkit_version: String,
    pub output_files: Vec<OutputFile>,
    /// Free-form results summary (not hashed).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(experiment_name: impl Into<String>, seed: u64) -> Self {
        Self {
            experiment_name: experiment_name.into(),
            seed,
            parameters: Vec::new(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            output_files: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.parameters.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Record an output by name and content.
    pub fn record_output(&mut self, path: impl Into<String>, bytes: &[u8]) {
        self.output_files.push(OutputFile {
            path: path.into(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Hashes of the recorded outputs, in recording order.
    pub fn output_hashes(&self) -> Vec<&str> {
        self.output_files.iter().map(|f| f.sha256.as_str()).collect()
    }
}
