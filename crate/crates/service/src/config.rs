use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use scideator::session::EngineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Jobs that may run at once.
    pub workers: usize,
    /// Session directories live here.
    pub data_dir: PathBuf,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { host: "127.0.0.1".into(), port: 8080, workers: 4, data_dir: PathBuf::from("sessions") }
    }
}

/// The whole configuration file: `[server]` and `[engine]` (with
/// `[engine.novelty]`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub server: ServerConfig,
    pub engine: EngineConfig,
}

impl ServiceConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| ConfigError::Parse(path.to_path_buf(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use scideator::session::RunMode;

    #[test]
    fn partial_toml_fills_defaults() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("scideator.toml");
        std::fs::write(&path, "[server]\nport = 9000\n\n[engine]\nmode = \"offline\"\n\n[engine.novelty]\nrerank_top_k = 5\n").unwrap();
        let c = ServiceConfig::load(&path).unwrap();
        assert_eq!(c.server.port, 9000);
        assert_eq!(c.server.workers, 4);
        assert_eq!(c.engine.mode, RunMode::Offline);
        assert_eq!(c.engine.novelty.rerank_top_k, 5);
        assert_eq!(c.engine.novelty.embed_top_n, 100);
        std::fs::write(&path, "[server]\nport = \"x\"\n").unwrap();
        assert!(matches!(ServiceConfig::load(&path), Err(ConfigError::Parse(..))));
    }

    #[test]
    fn example_config_parses() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scideator.example.toml");
        let c = ServiceConfig::load(&path).unwrap();
        assert_eq!(c.engine.mode, RunMode::Replay);
        let mut defaults = ServiceConfig::default();
        defaults.engine.fixtures_dir = c.engine.fixtures_dir.clone();
        defaults.engine.general_model = c.engine.general_model.clone();
        defaults.engine.reasoning_model = c.engine.reasoning_model.clone();
        assert_eq!(c, defaults);
    }
}
