//! Run manifests and replay.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cbmlab_core::io::{atomic_write, fnv1a64};
use cbmlab_core::Result;

use crate::config::RunConfig;
use crate::exec::{execute, Outputs};
use crate::EXIT_MISMATCH;

pub const SCHEMA: &str = "cbmlab-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    /// FNV-1a 64 of the file contents, hex.
    pub fnv1a64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub config: RunConfig,
    pub outputs: Vec<OutputRecord>,
}

impl Manifest {
    pub fn new(config: &RunConfig, outputs: &Outputs) -> Self {
        Self {
            schema: SCHEMA.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            outputs: outputs
                .files
                .iter()
                .map(|(name, bytes)| OutputRecord {
                    file: name.clone(),
                    bytes: bytes.len(),
                    fnv1a64: format!("{:016x}", fnv1a64(bytes)),
                })
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("serialisable");
        s.push('\n');
        s.into_bytes()
    }
}

/// Writes every output and then the manifest. Nothing is written unless the
/// whole run succeeded, and each file appears atomically.
pub fn write_run(dir: &Path, config: &RunConfig, outputs: &Outputs) -> Result<Manifest> {
    let manifest = Manifest::new(config, outputs);
    for (name, bytes) in &outputs.files {
        atomic_write(&dir.join(name), bytes)?;
    }
    atomic_write(&dir.join(MANIFEST_FILE), &manifest.to_bytes())?;
    Ok(manifest)
}

/// Reruns the manifest's configuration and compares every output with the
/// recorded digests and with the files next to the manifest, when present.
/// Returns 0 if all match and [`EXIT_MISMATCH`] otherwise.
pub fn reproduce(path: &Path, out: Option<&Path>) -> Result<i32> {
    let recorded: Manifest = serde_json::from_slice(&fs::read(path)?)?;
    if recorded.schema != SCHEMA {
        return Err(cbmlab_core::Error::Parameter(format!(
            "unsupported manifest schema {:?}",
            recorded.schema
        )));
    }
    let outputs = execute(&recorded.config)?;
    let fresh = Manifest::new(&recorded.config, &outputs);
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut mismatches = Vec::new();
    if fresh.outputs != recorded.outputs {
        mismatches.push("output digests differ from the manifest".to_string());
    }
    for (name, bytes) in &outputs.files {
        if let Ok(existing) = fs::read(dir.join(name)) {
            if &existing != bytes {
                mismatches.push(format!("{name} differs from the rerun"));
            }
        }
    }
    if let Some(out) = out {
        write_run(out, &recorded.config, &outputs)?;
    }
    for m in &mismatches {
        eprintln!("mismatch: {m}");
    }
    if mismatches.is_empty() {
        println!("reproduced {} files, byte-identical", outputs.files.len());
        Ok(0)
    } else {
        Ok(EXIT_MISMATCH)
    }
}
