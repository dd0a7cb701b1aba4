use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run, written next to its outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved configuration; passing this file back through
    /// `--config` replays the run.
    pub config: Value,
    pub seed: u64,
    pub artifacts: Vec<PathBuf>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn write<C: Serialize>(
        out: &Path,
        command: &str,
        config: &C,
        seed: u64,
        artifacts: Vec<PathBuf>,
        started_at: f64,
    ) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(decl::Error::from)?,
            seed,
            artifacts,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: now(),
        };
        let path = out.join(MANIFEST_FILE);
        decl::io::write_json(&path, &manifest)?;
        Ok(path)
    }
}

/// Loads a command's configuration from `path`, or its defaults when no
/// file is given. A run manifest of the same command is accepted too.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("command") && obj.contains_key("config") {
            let recorded = obj.get("command").and_then(Value::as_str).unwrap_or_default();
            if recorded != command {
                return Err(CliError::config(
                    "config",
                    format!("manifest was written by `{recorded}`, not `{command}`"),
                ));
            }
            value = obj.remove("config").unwrap_or(Value::Null);
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
}
