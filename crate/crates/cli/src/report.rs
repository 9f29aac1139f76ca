//! Report assembly: one row per check, JSON as the primary artifact, CSV
//! as an optional table. Reports embed the config text and input digests
//! so a run can be reproduced from its report alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub generated_unix: u64,
    pub suite: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config_text: String,
    pub params: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn write_json(report: &Report, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::usage(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv(report: &Report, path: &Path) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::usage(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["name", "pass", "detail"]).map_err(io_err)?;
    for c in &report.checks {
        w.write_record([c.name.as_str(), if c.pass { "pass" } else { "fail" }, c.detail.as_str()])
            .map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}
