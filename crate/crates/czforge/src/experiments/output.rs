//! Deterministic result persistence.
//!
//! Every payload records the config hash; rewriting a file produced from a
//! different config fails unless forced. Payload bytes depend only on the
//! config (wall-clock timestamps live in a separate sidecar file).

use crate::{CzError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// SHA-256 of the raw config document, hex encoded.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

/// Writes JSON reports and CSV tables into one output directory, enforcing
/// the hash-overwrite policy.
pub struct OutputWriter {
    dir: PathBuf,
    hash: String,
    force: bool,
    written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path, hash: &str, force: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            force,
            written: Vec::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn guard(&self, path: &Path, existing_hash: Option<String>) -> Result<()> {
        if self.force {
            return Ok(());
        }
        if let Some(found) = existing_hash {
            if found != self.hash {
                return Err(CzError::HashMismatch {
                    path: path.display().to_string(),
                    found,
                    expected: self.hash.clone(),
                });
            }
        }
        Ok(())
    }

    /// Serialize `payload` as pretty JSON. The payload must carry its own
    /// `config_hash` field (checked against this writer's hash).
    pub fn write_json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let value = serde_json::to_value(payload)?;
        match value.get("config_hash").and_then(|v| v.as_str()) {
            Some(h) if h == self.hash => {}
            other => {
                return Err(CzError::Config(format!(
                    "payload for {name} must embed config_hash {}, found {other:?}",
                    self.hash
                )))
            }
        }
        if path.exists() {
            let existing: Option<String> = fs::read_to_string(&path)
                .ok()
                .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
                .and_then(|v| v.get("config_hash")?.as_str().map(str::to_string));
            self.guard(&path, existing)?;
        }
        fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Write a CSV table: a `# config_hash=...` comment line, a header row,
    /// then one row per record.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if path.exists() {
            let existing = fs::read_to_string(&path).ok().and_then(|s| {
                s.lines()
                    .next()?
                    .strip_prefix("# config_hash=")
                    .map(str::to_string)
            });
            self.guard(&path, existing)?;
        }
        let mut out = format!("# config_hash={}\n{}\n", self.hash, header.join(","));
        for row in rows {
            if row.len() != header.len() {
                return Err(CzError::Config(format!(
                    "csv row width {} does not match header width {}",
                    row.len(),
                    header.len()
                )));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        fs::write(&path, out)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Timestamp sidecar; the only place wall-clock time appears.
    pub fn write_sidecar(&mut self, scenario: &str) -> Result<PathBuf> {
        let path = self.dir.join(format!("{scenario}.meta.json"));
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = serde_json::json!({
            "scenario": scenario,
            "config_hash": self.hash,
            "completed_unix_time": now,
            "outputs": self
                .written
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>(),
        });
        fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(path)
    }
}

/// Shortest-round-trip decimal rendering; deterministic across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
