//! Collected report files, the run manifest and the all-or-nothing write to the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
const STAGING_DIR: &str = ".entropic-bespoke-staging";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct InputRecord {
    role: String,
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct OutputRecord {
    file: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    options: &'a RunConfig,
    inputs: Vec<InputRecord>,
    outputs: Vec<OutputRecord>,
}

/// Report files of one run, keyed by file name, plus hashes of every input read.
#[derive(Debug, Default)]
pub struct RunOutputs {
    files: BTreeMap<String, String>,
    inputs: Vec<InputRecord>,
}

impl RunOutputs {
    pub fn insert(&mut self, name: &str, contents: String) {
        self.files.insert(name.to_string(), contents);
    }

    /// Hashes an input file; `shown` is the path as written in the config.
    pub fn record_input(&mut self, role: &str, shown: &Path, resolved: &Path) -> Result<(), CliError> {
        let bytes = fs::read(resolved)
            .map_err(|e| CliError::config(format!("cannot read {role} input {}: {e}", resolved.display())))?;
        self.inputs.push(InputRecord {
            role: role.to_string(),
            path: shown.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Adds `manifest.json` describing the inputs, effective options and every other output.
    pub fn finish(mut self, mode: &'static str, config: &RunConfig) -> Result<BTreeMap<String, String>, CliError> {
        let outputs = self
            .files
            .iter()
            .map(|(file, text)| OutputRecord {
                file: file.clone(),
                sha256: sha256_hex(text.as_bytes()),
            })
            .collect();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            mode,
            options: config,
            inputs: std::mem::take(&mut self.inputs),
            outputs,
        };
        let mut json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::new("E_INTERNAL", format!("manifest serialisation: {e}")))?;
        json.push('\n');
        self.files.insert(MANIFEST_FILE.to_string(), json);
        Ok(self.files)
    }
}

/// Writes every file into a staging directory under `out`, then moves them into place.
///
/// On failure the staging directory is removed, and so is `out` if this call created it.
pub fn commit(out: &Path, files: &BTreeMap<String, String>) -> Result<(), CliError> {
    let created = !out.exists();
    let staging: PathBuf = out.join(STAGING_DIR);
    let mut moved: Vec<PathBuf> = Vec::new();
    let result = (|| -> std::io::Result<()> {
        fs::create_dir_all(out)?;
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        for (name, text) in files {
            fs::write(staging.join(name), text)?;
        }
        for name in files.keys() {
            fs::rename(staging.join(name), out.join(name))?;
            moved.push(out.join(name));
        }
        fs::remove_dir(&staging)
    })();
    result.map_err(|e| {
        for path in &moved {
            let _ = fs::remove_file(path);
        }
        discard(out, created);
        CliError::io(format!("writing outputs to {}: {e}", out.display()))
    })
}

/// Best-effort removal of partial outputs.
fn discard(out: &Path, created: bool) {
    let _ = fs::remove_dir_all(out.join(STAGING_DIR));
    if created {
        let _ = fs::remove_dir_all(out);
    }
}
