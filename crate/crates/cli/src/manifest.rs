//! Run manifest: every output directory gets exactly one `manifest.json`
//! recording the command, resolved configuration, seeds, input digests and
//! timing, so a run can be reproduced from the manifest alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    command: String,
    argv: Vec<String>,
    library_version: String,
    config: Value,
    seeds: Value,
    inputs: Vec<InputDigest>,
    started_at_epoch_secs: u64,
    duration_secs: f64,
}

pub struct ManifestBuilder {
    command: String,
    config: Value,
    seeds: Value,
    inputs: Vec<InputDigest>,
    start_instant: Instant,
    start_epoch: u64,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config: Value::Null,
            seeds: Value::Null,
            inputs: Vec::new(),
            start_instant: Instant::now(),
            start_epoch: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn config<T: Serialize>(&mut self, config: &T) -> Result<&mut Self> {
        self.config = serde_json::to_value(config)?;
        Ok(self)
    }

    pub fn seeds<T: Serialize>(&mut self, seeds: &T) -> Result<&mut Self> {
        self.seeds = serde_json::to_value(seeds)?;
        Ok(self)
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path)
            .with_context(|| format!("reading input {} for digest", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256,
        });
        Ok(self)
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let manifest = Manifest {
            command: self.command.clone(),
            argv: std::env::args().collect(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            seeds: self.seeds.clone(),
            inputs: self
                .inputs
                .iter()
                .map(|i| InputDigest {
                    path: i.path.clone(),
                    sha256: i.sha256.clone(),
                })
                .collect(),
            started_at_epoch_secs: self.start_epoch,
            duration_secs: self.start_instant.elapsed().as_secs_f64(),
        };
        let path = out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}
