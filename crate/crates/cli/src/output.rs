//! Output directories and manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one command and writes `manifest.json` last.
pub struct Artifacts {
    dir: PathBuf,
    command: &'static str,
    config: Value,
    config_hash: String,
    files: Vec<Value>,
}

impl Artifacts {
    /// The hash covers the resolved configuration without the output path.
    pub fn new<C: Serialize>(dir: &Path, command: &'static str, config: &C) -> Result<Self, CliError> {
        let mut value = serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?;
        if let Value::Object(m) = &mut value {
            m.remove("out");
        }
        let canonical = serde_json::to_string(&value).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            command,
            config: value,
            config_hash: sha256(canonical.as_bytes()),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(json!({ "name": name, "bytes": bytes.len(), "sha256": sha256(bytes) }));
        Ok(())
    }

    pub fn finish(self, summary: Value) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "symflow",
            "version": symflow_core::VERSION,
            "command": self.command,
            "config_sha256": self.config_hash,
            "config": self.config,
            "files": self.files,
            "summary": summary,
        });
        std::fs::write(self.dir.join("manifest.json"), pretty(&manifest)?)?;
        Ok(())
    }
}
