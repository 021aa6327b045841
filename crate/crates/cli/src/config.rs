//! The optional run configuration file. Every key mirrors a flag; flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, ErrorClass};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub ingest: IngestSection,
    pub metrics: MetricsSection,
    pub fit: FitSection,
    pub bootstrap: BootstrapSection,
    pub project: ProjectSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub aliases: Option<PathBuf>,
    pub meters: Option<PathBuf>,
    pub centuries: Option<PathBuf>,
    pub min_cell: Option<usize>,
    pub retained_meters: Option<Vec<String>>,
    pub require_form: Option<bool>,
    pub require_meter: Option<bool>,
    pub mode: Option<String>,
    pub features: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub unknown: Option<String>,
    pub boundary: Option<String>,
    pub delimiter: Option<char>,
    pub mesra_delimiters: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub features: Option<PathBuf>,
    pub unknown: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub estimator: Option<String>,
    pub tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub min_cell: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub replicates: Option<usize>,
    pub metrics: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectSection {
    pub highlight: Option<Vec<String>>,
    pub per_page: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub replicates: Option<usize>,
    pub min_cell: Option<usize>,
    pub estimator: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            let class = if e.kind() == std::io::ErrorKind::NotFound {
                ErrorClass::MissingInput
            } else {
                ErrorClass::Other
            };
            CliError::new(class, format!("config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }
}
