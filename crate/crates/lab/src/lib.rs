//! Experiment runner: reads a [`LabConfig`], builds the surface, runs one
//! experiment and writes its outputs next to a hashed manifest.

// Negated comparisons such as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

pub use config::{Diagnostic, Experiment, LabConfig, Surface};
use output::FileRecord;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),
    #[error("{0}")]
    ConfigFile(#[from] config::ConfigError),
    #[error("construction failed: {0}")]
    Construction(anosov_core::Error),
    #[error("numerical failure: {0}")]
    Numerical(anosov_core::Error),
    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::ConfigFile(_) => 2,
            LabError::Construction(_) => 3,
            LabError::Numerical(_) => 4,
            LabError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub experiment: Experiment,
    pub config: LabConfig,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub summary: Value,
    pub files: Vec<FileRecord>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Diagnostics for a config; empty iff it is runnable.
pub fn validate(cfg: &LabConfig) -> Vec<Diagnostic> {
    cfg.diagnostics()
}

/// Runs the configured experiment and writes its outputs plus
/// `manifest.json` into `output_dir` (or the config's own). Nothing is left
/// behind on failure.
pub fn run(cfg: &LabConfig, output_dir: Option<&Path>) -> Result<RunManifest, LabError> {
    let diagnostics = validate(cfg);
    if !diagnostics.is_empty() {
        return Err(LabError::Config(diagnostics));
    }
    let dir: PathBuf = output_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());
    let started = now_ms();
    let (outputs, summary) = experiments::run_experiment(cfg)?;
    let created = !dir.exists();
    // `write_all` cleans up after its own failures.
    let files = output::write_all(&dir, &outputs)?;
    let mut manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        config: cfg.clone(),
        started_unix_ms: started,
        finished_unix_ms: 0,
        summary,
        files,
    };
    manifest.config.output_dir = dir.clone();
    manifest.finished_unix_ms = now_ms();
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    if let Err(e) = std::fs::write(dir.join(MANIFEST), bytes) {
        let written: Vec<PathBuf> = manifest.files.iter().map(|f| dir.join(&f.name)).collect();
        output::remove_partial(&dir, &written, created);
        return Err(e.into());
    }
    Ok(manifest)
}
