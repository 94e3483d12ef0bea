//! Report files: a manifest describing the run, the result, and a metadata
//! section for everything that legitimately varies between identical runs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        Ok(Self { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub workers: usize,
    pub version: String,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: impl Serialize, workers: usize) -> Result<Self> {
        Ok(Self {
            subcommand: subcommand.into(),
            config: serde_json::to_value(config)?,
            seed: None,
            workers,
            version: VERSION.into(),
            inputs: Vec::new(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_input(mut self, path: impl Into<PathBuf>) -> Result<Self> {
        self.inputs.push(InputDigest::of_file(path.into())?);
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub started_unix: f64,
    pub wall_time_seconds: f64,
}

impl Metadata {
    pub fn new(started: SystemTime, wall: Duration) -> Self {
        let started_unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Self { started_unix, wall_time_seconds: wall.as_secs_f64() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub manifest: RunManifest,
    pub result: T,
    pub metadata: Metadata,
}

impl<T: Serialize> Report<T> {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON of manifest and result only: equal for runs with equal manifests.
    pub fn deterministic_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Body<'a, T> {
            manifest: &'a RunManifest,
            result: &'a T,
        }
        Ok(serde_json::to_string_pretty(&Body { manifest: &self.manifest, result: &self.result })?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }
}

/// Writes rows under a header.
pub fn write_csv_rows<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn metadata_is_the_only_varying_part() {
        let m = RunManifest::new("verify", serde_json::json!({"n": 4}), 1).unwrap();
        let a = Report { manifest: m.clone(), result: 0.5, metadata: Metadata::new(UNIX_EPOCH, Duration::ZERO) };
        let b = Report { manifest: m, result: 0.5, metadata: Metadata::new(SystemTime::now(), Duration::from_secs(3)) };
        assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
        assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}
