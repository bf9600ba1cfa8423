use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use infochart::config::Config;
use infochart::gateway::GatewayCounters;
use serde::Serialize;
use serde_json::Value;

use crate::run::{pretty_json, write_file, CliError};

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

/// Written once per command beside its outputs. Timestamps are the only
/// fields that differ between identical reruns.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: Vec<String>,
    pub config_path: Option<String>,
    pub config: Config,
    pub seed: u64,
    pub inputs: Vec<String>,
    /// Paths relative to the manifest's directory, sorted.
    pub outputs: Vec<String>,
    pub gateway: GatewayCounters,
    pub failures: Vec<Failure>,
    /// Command-specific summary.
    pub summary: Value,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    path: PathBuf,
}

impl ManifestBuilder {
    pub fn start(path: PathBuf, config: &Config, config_path: Option<&Path>) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                tool_version: env!("CARGO_PKG_VERSION"),
                command: std::env::args().collect(),
                config_path: config_path.map(|p| p.display().to_string()),
                config: config.clone(),
                seed: config.seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                gateway: GatewayCounters::default(),
                failures: Vec::new(),
                summary: Value::Null,
                started_unix_ms: now_ms(),
                finished_unix_ms: 0,
            },
            path,
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.display().to_string());
    }

    /// Records an output file, stored relative to the manifest directory.
    pub fn output(&mut self, p: &Path) {
        let base = self.path.parent().unwrap_or(Path::new(""));
        let rel = p.strip_prefix(base).unwrap_or(p);
        self.manifest.outputs.push(rel.to_string_lossy().replace('\\', "/"));
    }

    pub fn failure(&mut self, id: impl Into<String>, error: impl ToString) {
        self.manifest.failures.push(Failure { id: id.into(), error: error.to_string() });
    }

    pub fn failures(&self) -> usize {
        self.manifest.failures.len()
    }

    pub fn gateway(&mut self, counters: GatewayCounters) {
        self.manifest.gateway = counters;
    }

    pub fn summary(&mut self, summary: Value) {
        self.manifest.summary = summary;
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.manifest.outputs.sort();
        self.manifest.finished_unix_ms = now_ms();
        write_file(&self.path, pretty_json(&self.manifest))?;
        Ok(self.path)
    }
}
