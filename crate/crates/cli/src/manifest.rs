use std::path::Path;

use serde::Serialize;
use tag_core::experiments::write_atomic;
use tag_core::{ConfigFile, ModelConfig, TagError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce an output set. Contains no timestamps so
/// that reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: String,
    pub tool_version: String,
    pub arguments: Vec<String>,
    pub parameters: ConfigFile,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_path: Option<&Path>,
        seed: Option<u64>,
        output_dir: &Path,
        model: &ModelConfig,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            seed,
            output_dir: output_dir.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            arguments: std::env::args().skip(1).collect(),
            parameters: ConfigFile::from_model(model),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), TagError> {
        self.write_as(&dir.join(MANIFEST_FILE))
    }

    pub fn write_as(&self, path: &Path) -> Result<(), TagError> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| TagError::Parse(format!("manifest: {e}")))?;
        json.push('\n');
        write_atomic(path, json.as_bytes())
    }
}
