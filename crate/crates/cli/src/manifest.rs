//! Record of one command invocation: inputs, seeds and every file written.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::files::{open, write_text};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Seconds since the Unix epoch when the manifest was written.
    pub timestamp_unix: u64,
    pub config_paths: Vec<PathBuf>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seeds: Vec<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config_paths: config_path.map(Path::to_path_buf).into_iter().collect(),
            seeds,
            artifacts: Vec::new(),
        }
    }

    pub fn add(&mut self, path: impl Into<PathBuf>) {
        self.artifacts.push(path.into());
    }

    /// Every referenced file must exist.
    pub fn check(&self) -> Result<()> {
        for p in self.config_paths.iter().chain(&self.artifacts) {
            if !p.is_file() {
                bail!("manifest references missing file {}", p.display());
            }
        }
        Ok(())
    }

    /// Checks the references, then writes pretty JSON atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.check()?;
        write_text(path, &(serde_json::to_string_pretty(self)? + "\n"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_reader(open(path)?)
            .with_context(|| format!("reading manifest {}", path.display()))
    }
}
