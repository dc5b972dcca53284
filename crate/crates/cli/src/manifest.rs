//! Run manifests: what was run, on what, with which settings.
//!
//! A manifest sits next to the primary output as `<stem>.manifest.json`.
//! Timestamps live only here, so result files are byte-identical across
//! reruns.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name; `rerun` replays them.
    pub argv: Vec<String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Effective settings, including defaults that were not passed.
    pub config: Value,
    pub library_version: String,
    pub cli_version: String,
    pub started_at: String,
    pub finished_at: String,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], started_at: String) -> Self {
        Self {
            command: command.to_owned(),
            argv: argv.to_vec(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: Value::Null,
            library_version: causal_compression::VERSION.to_owned(),
            cli_version: env!("CARGO_PKG_VERSION").to_owned(),
            started_at,
            finished_at: String::new(),
        }
    }

    pub fn write_next_to(mut self, primary: &Path) -> Result<PathBuf, CliError> {
        self.finished_at = now();
        let path = crate::io::sibling(primary, "manifest", "json");
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        crate::io::write(&path, &text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}
