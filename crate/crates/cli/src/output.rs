//! Staged outputs and the per-directory run manifest.
//!
//! Nothing reaches the output paths until [`OutputSet::commit`], which
//! writes each file beside its destination and renames it into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, ErrorClass};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Streamed digest of a file on disk.
pub fn file_digest(path: &Path) -> CliResult<String> {
    let mut f = fs::File::open(path).map_err(|e| {
        let class = if e.kind() == std::io::ErrorKind::NotFound {
            ErrorClass::MissingInput
        } else {
            ErrorClass::Other
        };
        CliError::new(class, format!("{}: {e}", path.display()))
    })?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path.display(), e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    /// Digest of the effective settings after config and flags are merged.
    pub config_sha256: String,
    pub settings: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    /// Output file names relative to the manifest's directory.
    pub outputs: BTreeMap<String, String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

/// One manifest per output directory, holding the latest run of each
/// subcommand that wrote there.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub runs: BTreeMap<String, RunRecord>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_NAME);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| CliError::new(ErrorClass::Schema, format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(CliError::io(path.display(), e)),
        }
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Provenance shared by every file a subcommand writes.
pub struct RunInfo {
    pub subcommand: &'static str,
    pub seed: u64,
    pub settings: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub started_unix: u64,
}

#[derive(Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    /// Write every staged file, then one manifest per destination directory.
    pub fn commit(self, run: &RunInfo) -> CliResult<Vec<PathBuf>> {
        let mut inputs = BTreeMap::new();
        for p in &run.inputs {
            inputs.insert(p.display().to_string(), file_digest(p)?);
        }
        let settings_bytes = serde_json::to_vec(&run.settings).map_err(|e| CliError::new(ErrorClass::Other, e.to_string()))?;
        let config_sha256 = sha256_hex(&settings_bytes);

        let mut by_dir: BTreeMap<PathBuf, BTreeMap<String, String>> = BTreeMap::new();
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            let dir = parent_dir(path);
            fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
            let name = path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
            if name == MANIFEST_NAME {
                return Err(CliError::config(format!("{} is reserved for the run manifest", path.display())));
            }
            let tmp = dir.join(format!(".{name}.partial"));
            fs::write(&tmp, bytes).map_err(|e| CliError::io(tmp.display(), e))?;
            staged.push((tmp, path.clone(), bytes.len() as u64));
            by_dir.entry(dir).or_default().insert(relative_name(path), sha256_hex(bytes));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, dest, len) in staged {
            fs::rename(&tmp, &dest).map_err(|e| CliError::io(dest.display(), e))?;
            let on_disk = fs::metadata(&dest).map_err(|e| CliError::io(dest.display(), e))?.len();
            if on_disk != len {
                return Err(CliError::new(
                    ErrorClass::Other,
                    format!("{}: wrote {on_disk} bytes, expected {len}", dest.display()),
                ));
            }
            written.push(dest);
        }
        let finished = unix_now();
        for (dir, outputs) in by_dir {
            let mut manifest = RunManifest::load(&dir)?;
            manifest.runs.insert(
                run.subcommand.to_string(),
                RunRecord {
                    tool_version: TOOL_VERSION.to_string(),
                    subcommand: run.subcommand.to_string(),
                    seed: run.seed,
                    config_sha256: config_sha256.clone(),
                    settings: run.settings.clone(),
                    inputs: inputs.clone(),
                    outputs,
                    started_unix: run.started_unix,
                    finished_unix: finished,
                },
            );
            let text = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::new(ErrorClass::Other, e.to_string()))?;
            let path = dir.join(MANIFEST_NAME);
            let tmp = dir.join(format!(".{MANIFEST_NAME}.partial"));
            fs::write(&tmp, &text).map_err(|e| CliError::io(tmp.display(), e))?;
            fs::rename(&tmp, &path).map_err(|e| CliError::io(path.display(), e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn relative_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default()
}
