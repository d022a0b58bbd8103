use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Record of one run: what was asked for and what was written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the command and the resolved configs.
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub config: Vec<String>,
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn config_hash(command: &str, configs: &[&RunConfig]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for c in configs {
        h.update(b"\0");
        h.update(c.canonical().as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, configs: &[&RunConfig], outputs: Vec<String>, started_unix: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config_hash: config_hash(command, configs),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix: now_unix(),
            seed: configs.first().map(|c| c.seed).unwrap_or(0),
            outputs,
            config: configs.iter().map(|c| c.canonical().to_string()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&s)?)
    }
}
