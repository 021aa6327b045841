pub mod bootstrap;
pub mod fit;
pub mod ingest;
pub mod metrics;
pub mod project;
pub mod report;
pub mod synth;

use std::path::{Path, PathBuf};

use phonostyle::metrics::rows::read_rows_path;
use phonostyle::metrics::{MetricKind, MetricRow};
use phonostyle::phonology::{FeatureTable, UnknownPolicy};
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult, ErrorClass};
use crate::output::{unix_now, OutputSet, RunInfo};

pub struct Context {
    pub config: Config,
    pub seed: u64,
    pub config_path: Option<PathBuf>,
}

impl Context {
    /// Commit `outputs` with a manifest entry describing this run.
    pub fn finish<S: Serialize>(
        &self,
        subcommand: &'static str,
        settings: &S,
        inputs: Vec<PathBuf>,
        outputs: OutputSet,
        started_unix: u64,
    ) -> CliResult<()> {
        let mut inputs = inputs;
        if let Some(p) = &self.config_path {
            inputs.push(p.clone());
        }
        let settings = serde_json::to_value(settings).map_err(|e| CliError::new(ErrorClass::Other, e.to_string()))?;
        let n = outputs.len();
        outputs.commit(&RunInfo {
            subcommand,
            seed: self.seed,
            settings,
            inputs,
            started_unix,
        })?;
        log::info!("{subcommand}: wrote {n} file(s)");
        Ok(())
    }
}

pub fn now() -> u64 {
    unix_now()
}

/// Fail with the missing-input class before any work starts.
pub fn require_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(ErrorClass::MissingInput, format!("input not found: {}", path.display())))
    }
}

pub fn load_features(path: Option<&Path>) -> CliResult<FeatureTable> {
    match path {
        Some(p) => {
            require_input(p)?;
            Ok(FeatureTable::load(p)?)
        }
        None => Ok(FeatureTable::default_table()),
    }
}

pub fn parse_policy(name: Option<&str>) -> CliResult<UnknownPolicy> {
    Ok(name.map(str::parse).transpose()?.unwrap_or_default())
}

pub fn parse_metric(name: &str) -> CliResult<MetricKind> {
    MetricKind::ALL
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| {
            CliError::config(format!(
                "unknown metric `{name}` (available: {})",
                MetricKind::ALL.map(|m| m.name()).join(", ")
            ))
        })
}

pub fn load_rows(path: &Path) -> CliResult<Vec<MetricRow>> {
    require_input(path)?;
    Ok(read_rows_path(path)?)
}

pub fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::new(ErrorClass::Other, e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

pub fn write_with<F>(f: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> phonostyle::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}
