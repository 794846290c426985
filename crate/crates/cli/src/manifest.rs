//! Output bookkeeping: files written by a run, their checksums, and the
//! manifest or error record that closes the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{kind_name, CliError};

pub const MANIFEST: &str = "manifest.json";
pub const ERROR_RECORD: &str = "error.json";

/// Output directory plus the payload files written into it.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Path for a payload file, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "povm-forge")]
    cli: &'static str,
    #[serde(rename = "povm-forge-core")]
    core: &'static str,
}

/// Inputs that determine a run.
#[derive(Serialize)]
pub struct Inputs {
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    command: &'a str,
    versions: Versions,
    timestamp_unix: u64,
    inputs: &'a Inputs,
    outputs: Vec<OutputEntry>,
    results: &'a Value,
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(povm_forge_core::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_manifest(
    outputs: &Outputs,
    command: &str,
    inputs: &Inputs,
    results: &Value,
) -> Result<(), CliError> {
    let mut files = outputs.files.clone();
    files.sort();
    let mut entries = Vec::new();
    for file in files {
        let path = outputs.dir.join(&file);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        entries.push(OutputEntry {
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
            file,
        });
    }
    let manifest = Manifest {
        tool: "povm-forge",
        command,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: povm_forge_core::VERSION,
        },
        timestamp_unix: timestamp(),
        inputs,
        outputs: entries,
        results,
    };
    let _ = fs::remove_file(outputs.dir.join(ERROR_RECORD));
    write_json(&outputs.dir.join(MANIFEST), &manifest)
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    tool: &'static str,
    command: &'a str,
    kind: &'static str,
    exit_code: u8,
    message: String,
}

pub fn write_error(dir: &Path, command: &str, error: &CliError) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let record = ErrorRecord {
        tool: "povm-forge",
        command,
        kind: kind_name(error.kind()),
        exit_code: error.exit_code(),
        message: error.to_string(),
    };
    let _ = fs::remove_file(dir.join(MANIFEST));
    write_json(&dir.join(ERROR_RECORD), &record)
}
