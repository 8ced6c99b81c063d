//! File formats, dataset IO and the `focalmcc` command line.
//!
//! The numerical work lives in [`focalmcc_core`]; this crate adds the CSV
//! loader, dataset manifests, the binary model container, TOML run
//! configurations, report writers, a threaded job runner and the CLI.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod manifest;
pub mod model_file;
pub mod predict;
pub mod report;
pub mod runner;

use std::path::{Path, PathBuf};

pub use error::{IoError, Result};

/// Environment variable that relocates relative output paths.
pub const OUTPUT_DIR_ENV: &str = "FOCALMCC_OUTPUT_DIR";

/// `path` under `$FOCALMCC_OUTPUT_DIR` when that is set and `path` is
/// relative.
pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `bytes`, creating parent directories.
pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let wrap = |source| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, bytes).map_err(wrap)
}
