//! Configuration and pipeline behind the `qhd-lab` binary.

pub mod config;
pub mod pipeline;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ConfigError, RunConfig};
pub use pipeline::{run_stage, Outcome, PipelineError, Stage};

pub const OUTPUT_ENV: &str = "QHD_LAB_OUTPUT";

/// `--output` beats `$QHD_LAB_OUTPUT`, which beats the config's `output_dir`.
pub fn resolve_output_dir(flag: Option<&Path>, env: Option<&str>, config_dir: &Path) -> PathBuf {
    match (flag, env.filter(|e| !e.is_empty())) {
        (Some(f), _) => f.to_path_buf(),
        (None, Some(e)) => PathBuf::from(e),
        (None, None) => config_dir.to_path_buf(),
    }
}

pub mod exit {
    pub const PASS: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const FAIL: i32 = 2;
}
