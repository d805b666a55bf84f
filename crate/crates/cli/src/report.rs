use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use vpa_core::{Config, ReferencePoint};

use crate::problem_file::ProblemFile;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub command: &'static str,
    pub problem: &'a ProblemFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ybar: Option<&'a ReferencePoint>,
    pub config: &'a Config,
    pub config_sha256: String,
    pub result: serde_json::Value,
}

/// SHA-256 of the compact JSON form of the configuration.
pub fn config_hash(cfg: &Config) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(cfg).map_err(|e| CliError::Operation(e.to_string()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn write_report(out: &Path, report: &Report) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Operation(e.to_string()))?;
    text.push('\n');
    write_file(&out.join("report.json"), text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Operation(format!("writing {}: {}", path.display(), e)))
}
