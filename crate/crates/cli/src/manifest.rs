use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::job::Job;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Record of one run: enough to reproduce its outputs with `rerun`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved parameters, defaults included.
    pub params: Job,
    /// Constants calibrated or derived during the run.
    pub calibration: serde_json::Value,
    pub version: String,
    pub timestamp: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(params: Job, inputs: Vec<PathBuf>) -> Self {
        RunManifest {
            command: params.name().to_string(),
            params,
            calibration: serde_json::Value::Null,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            inputs,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
