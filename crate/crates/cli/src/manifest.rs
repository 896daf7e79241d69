//! Run manifests: a JSON record of the exact configuration, input digests,
//! output digests, and stage timings of one command invocation.
//! Re-running with identical inputs and configuration reproduces identical
//! output digests; timings are informational.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Tracker configuration in config-file syntax, plus any
    /// command-specific parameters.
    pub config: BTreeMap<String, String>,
    /// Input path -> sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> sha256 hex digest.
    pub outputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "viou",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn set_config(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.outputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn record_timing(&mut self, stage: &str, seconds: f64) {
        self.timings_ms.insert(stage.to_string(), seconds * 1e3);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}
