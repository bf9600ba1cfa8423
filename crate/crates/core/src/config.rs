//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! jobs = 4
//!
//! [backends.generator]
//! kind = "scripted_mock"
//! script_file = "scripts/generator.json"
//!
//! [[metagen.generators]]
//! label = "g-low"
//! backend = "generator"
//! model = "metadata-gen"
//! temperature = 0.2
//!
//! [codegen]
//! max_iterations = 5
//! ```
//!
//! Every section is optional and every key has a default. Unknown keys
//! are rejected so typos surface instead of silently using defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::{CoderMode, JudgeMode, LoopConfig};
use crate::curation::CurationConfig;
use crate::eval::EvalOptions;
use crate::gateway::{BackendConfig, Gateway, GatewayError, DEFAULT_MAX_IN_FLIGHT};
use crate::metagen::StageConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {message}")]
    Read { path: String, message: String },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Root seed; per-document seeds are derived from it.
    pub seed: u64,
    /// Worker threads for corpus commands.
    pub jobs: usize,
    /// Concurrent model calls across all backends.
    pub max_in_flight: usize,
    pub backends: BTreeMap<String, BackendConfig>,
    pub metagen: StageConfig,
    pub codegen: LoopConfig,
    pub eval: EvalOptions,
    pub curation: CurationConfig,
    /// Directory that relative script paths resolve against; the config
    /// file's directory when loaded from disk.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            jobs: 1,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            backends: BTreeMap::new(),
            metagen: StageConfig::default(),
            codegen: LoopConfig::default(),
            eval: EvalOptions::default(),
            curation: CurationConfig::default(),
            base_dir: None,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
        let mut cfg = Config::from_toml_str(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Resolved configuration as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    fn require_backend(&self, name: &str, role: &str) -> Result<(), ConfigError> {
        if self.backends.contains_key(name) {
            Ok(())
        } else {
            Err(ConfigError::Invalid(format!("{role} uses backend `{name}`, which is not defined under [backends]")))
        }
    }

    /// Checks the sections the generation pipeline needs.
    pub fn validate_for_generate(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        self.metagen.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.codegen.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for g in &self.metagen.generators {
            self.require_backend(&g.backend, &format!("generator `{}`", g.label))?;
        }
        if let Some(r) = &self.metagen.ranker_backend {
            self.require_backend(r, "the ranker")?;
        }
        if self.codegen.coder_mode == CoderMode::Llm {
            self.require_backend(&self.codegen.coder_backend, "the coder")?;
        }
        if self.codegen.judge_mode != JudgeMode::Mechanical {
            self.require_backend(&self.codegen.judge_backend, "the judge")?;
        }
        Ok(())
    }

    /// Checks the curation section; `judge` when preference pairs are built.
    pub fn validate_for_curation(&self, judge: bool) -> Result<(), ConfigError> {
        self.validate_common()?;
        self.curation.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.require_backend(&self.curation.backend, "curation")?;
        if judge {
            self.require_backend(&self.curation.judge_backend, "the preference judge")?;
        }
        Ok(())
    }

    fn validate_common(&self) -> Result<(), ConfigError> {
        if self.jobs == 0 {
            return Err(ConfigError::Invalid("jobs must be >= 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::Invalid("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }

    pub fn all_mock(&self) -> bool {
        self.backends.values().all(BackendConfig::is_mock)
    }

    pub fn build_gateway(&self) -> Result<Gateway, ConfigError> {
        Ok(Gateway::from_configs(&self.backends, self.max_in_flight, self.base_dir.as_deref())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        let text = cfg.to_toml();
        assert_eq!(Config::from_toml_str(&text, "inline").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::from_toml_str("sed = 1", "inline").unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
        assert!(Config::from_toml_str("[codegen]\nmax_iteration = 3", "inline").is_err());
    }

    #[test]
    fn missing_backend_is_a_config_error() {
        let cfg = Config::from_toml_str("[[metagen.generators]]\nlabel = \"g\"\nbackend = \"nowhere\"", "inline").unwrap();
        let err = cfg.validate_for_generate().unwrap_err();
        assert!(err.to_string().contains("nowhere"), "{err}");
    }

    #[test]
    fn full_example_parses() {
        let text = r#"
seed = 7
jobs = 2

[backends.generator]
kind = "scripted_mock"
script = { "*" = "{}" }

[backends.remote]
kind = "http_chat"
endpoint = "http://127.0.0.1:9/v1/chat/completions"
auth_env = "CHAT_TOKEN"

[[metagen.generators]]
label = "low"
backend = "generator"
temperature = 0.2

[[metagen.generators]]
label = "high"
backend = "generator"
temperature = 0.9

[codegen]
max_iterations = 3
judge_mode = "mechanical"

[eval]
rouge = "f1"

[curation]
t_low = 0.1
"#;
        let cfg = Config::from_toml_str(text, "inline").unwrap();
        assert_eq!(cfg.metagen.generators.len(), 2);
        assert_eq!(cfg.codegen.max_iterations, 3);
        assert!(!cfg.all_mock());
        cfg.validate_for_generate().unwrap();
        let again = Config::from_toml_str(&cfg.to_toml(), "inline").unwrap();
        assert_eq!(again, cfg);
    }
}
