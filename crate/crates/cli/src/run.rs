//! Shared command plumbing: configuration, exit codes, output writing.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use infochart::config::Config;
use infochart::curation::write_atomic;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    /// Bad configuration, flags or input files.
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_INVALID, error: error.into() }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_RUNTIME, error: error.into() }
    }
}

pub fn exit_for(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    }
}

pub struct Context {
    pub config: Config,
    pub config_path: Option<PathBuf>,
}

impl Context {
    pub fn load(path: Option<&Path>, seed: Option<u64>, jobs: Option<usize>) -> Result<Context, CliError> {
        let mut config = match path {
            Some(p) => Config::load(p).map_err(CliError::usage)?,
            None => Config::default(),
        };
        if let Some(s) = seed {
            config.seed = s;
        }
        if let Some(j) = jobs {
            config.jobs = j;
        }
        if config.jobs == 0 {
            return Err(CliError::usage(anyhow::anyhow!("jobs must be >= 1")));
        }
        Ok(Context { config, config_path: path.map(Path::to_path_buf) })
    }

    /// Thread pool sized by the configured job count.
    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new().num_threads(self.config.jobs).build().map_err(CliError::runtime)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(anyhow::anyhow!("reading {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    write_atomic(path, contents.as_ref()).map_err(CliError::runtime)
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::runtime(anyhow::anyhow!("creating {}: {e}", path.display())))
}

pub fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize") + "\n"
}

/// `dir/stem.suffix` beside a single-file output.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}
