//! Deterministic result files.
//!
//! Every CSV starts with a '#'-prefixed metadata block (tool version,
//! command, config hash, effective seed) and every float is printed with a
//! fixed 12-digit scientific format, so reruns of the same config are
//! byte-identical. Summaries are JSON objects with sorted keys.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Run facts repeated at the top of every output file.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn header_block(&self) -> String {
        format!(
            "# ttn {}\n# command: {}\n# config_sha256: {}\n# seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config_sha256,
            self.seed
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Fixed-width scientific notation; the one float format in every table.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes metadata, optional extra '#' comment lines, and a CSV body.
pub fn write_csv(
    path: &Path,
    meta: &RunMeta,
    comments: &[String],
    body: &str,
) -> Result<()> {
    let mut text = meta.header_block();
    for line in comments {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(body);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Pretty-prints a summary object; serde_json keeps object keys sorted, so
/// the bytes are reproducible.
pub fn write_summary(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
