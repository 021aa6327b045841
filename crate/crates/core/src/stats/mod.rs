//! Controlled regressions with poem-clustered uncertainty, nested variance
//! ledgers, within-meter effects and century bootstrap trends.
//!
//! Least squares is pluggable: every solver implements [`Estimator`] and is
//! registered by name (`dense-qr`, `absorb`, `auto`) so callers pick one from
//! configuration. All of them return coefficients in the same
//! reference-level parametrization, and the clustered covariance is always
//! computed from the full model matrix.

pub mod bootstrap;
pub mod covariance;
pub mod design;
pub mod estimator;
pub mod models;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{MetricKind, MetricRow};
use crate::numeric::NeumaierSum;

pub use bootstrap::{bootstrap_century, BootstrapTrend, TrendCell};
pub use covariance::{cluster_robust, ClusterCovariance};
pub use design::{build_design, Design, FactorColumn};
pub use estimator::{estimator, estimators, Absorb, Auto, DenseQr, Estimator, SolveOptions, Solution};
pub use models::{
    century_trend, effect_correlation, nested_r2, within_meter_effects, EffectCorrelation, NestedEntry, NestedLedger,
    WithinMeterTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Poet,
    Meter,
    Form,
    Century,
}

impl Factor {
    pub fn name(self) -> &'static str {
        match self {
            Factor::Poet => "poet",
            Factor::Meter => "meter",
            Factor::Form => "form",
            Factor::Century => "century",
        }
    }
}

impl FromStr for Factor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poet" => Ok(Factor::Poet),
            "meter" => Ok(Factor::Meter),
            "form" => Ok(Factor::Form),
            "century" => Ok(Factor::Century),
            _ => Err(Error::Config(format!("unknown factor `{s}`"))),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    NSymbols,
    NTokens,
}

impl Covariate {
    pub fn name(self) -> &'static str {
        match self {
            Covariate::NSymbols => "n_symbols",
            Covariate::NTokens => "n_tokens",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterKey {
    #[default]
    Poem,
}

/// One regression: outcome, absorbed/encoded factors, length covariates
/// and an optional meter subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub outcome: MetricKind,
    #[serde(default)]
    pub fixed_effects: Vec<Factor>,
    #[serde(default)]
    pub covariates: Vec<Covariate>,
    #[serde(default)]
    pub cluster_key: ClusterKey,
    #[serde(default)]
    pub subset: Option<String>,
}

impl ModelSpec {
    pub fn new(outcome: MetricKind, fixed_effects: Vec<Factor>, covariates: Vec<Covariate>) -> Self {
        ModelSpec {
            outcome,
            fixed_effects,
            covariates,
            cluster_key: ClusterKey::Poem,
            subset: None,
        }
    }

    /// Poet + meter + form fixed effects with both length controls.
    pub fn primary(outcome: MetricKind) -> Self {
        Self::new(
            outcome,
            vec![Factor::Poet, Factor::Meter, Factor::Form],
            vec![Covariate::NSymbols, Covariate::NTokens],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.subset.is_some() && self.fixed_effects.contains(&Factor::Meter) {
            return Err(Error::Config("a meter subset cannot also carry a meter fixed effect".into()));
        }
        let mut seen = self.fixed_effects.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.fixed_effects.len() {
            return Err(Error::Config("duplicate fixed effect".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub estimator: String,
    pub solve: SolveOptions,
    /// Remove factors that have one level in the sample instead of failing.
    pub drop_single_level: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            estimator: "auto".into(),
            solve: SolveOptions::default(),
            drop_single_level: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub estimator: String,
    /// Estimated terms in column order.
    pub terms: Vec<String>,
    /// Every term including reference levels (reported as exactly 0).
    pub coefficients: BTreeMap<String, f64>,
    /// CR1 poem-clustered standard errors of the estimated terms.
    pub se_clustered: BTreeMap<String, f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub n_params: usize,
    pub reference_levels: BTreeMap<String, String>,
    pub covariate_means: BTreeMap<String, f64>,
    pub sweeps: usize,
    /// Terms whose clustered variance rests on a single cluster.
    pub flagged_terms: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub beta: Vec<f64>,
    #[serde(skip)]
    pub covariance: Option<Matrix>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn coef(&self, term: &str) -> Option<f64> {
        self.coefficients.get(term).copied()
    }

    pub fn se(&self, term: &str) -> Option<f64> {
        self.se_clustered.get(term).copied()
    }

    /// Coefficient of each level of `factor`, reference included.
    pub fn factor_effects(&self, factor: Factor) -> BTreeMap<String, f64> {
        let prefix = format!("{}:", factor.name());
        self.coefficients
            .iter()
            .filter_map(|(t, v)| t.strip_prefix(&prefix).map(|l| (l.to_string(), *v)))
            .collect()
    }
}

/// Coefficient of determination; 0 with a warning for a constant outcome.
pub fn r_squared(y: &[f64], residuals: &[f64], warnings: &mut Vec<String>) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().copied().collect::<NeumaierSum>().value() / n;
    let sst = y.iter().map(|v| (v - mean) * (v - mean)).collect::<NeumaierSum>().value();
    let ssr = residuals.iter().map(|e| e * e).collect::<NeumaierSum>().value();
    if sst <= f64::EPSILON * f64::EPSILON * n * mean.abs().max(1.0).powi(2) {
        warnings.push("outcome has zero variance; R² defined as 0".into());
        return 0.0;
    }
    (1.0 - ssr / sst).clamp(0.0, 1.0)
}

/// Solve, then attach clustered covariance and fit statistics.
pub fn fit_design(design: &Design, spec: &ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    let est = estimator(&opts.estimator)?;
    let sol = est.solve(design, &opts.solve)?;
    let fitted = design.predict(&sol.beta);
    let residuals: Vec<f64> = design.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let mut warnings = design.warnings.clone();
    let r2 = r_squared(&design.y, &residuals, &mut warnings);
    let cov = cluster_robust(design, &residuals)?;

    let mut coefficients = BTreeMap::new();
    let mut se_clustered = BTreeMap::new();
    for (j, name) in design.column_names.iter().enumerate() {
        coefficients.insert(name.clone(), sol.beta[j]);
        se_clustered.insert(name.clone(), cov.se[j]);
    }
    let mut reference_levels = BTreeMap::new();
    for fc in &design.factors {
        coefficients.insert(design::term_name(fc.factor, fc.reference()), 0.0);
        reference_levels.insert(fc.factor.name().to_string(), fc.reference().to_string());
    }
    let covariate_means = design
        .covariates
        .iter()
        .zip(&design.covariate_means)
        .map(|((c, _), m)| (c.name().to_string(), *m))
        .collect();
    Ok(FitResult {
        spec: spec.clone(),
        estimator: sol.estimator.to_string(),
        terms: design.column_names.clone(),
        coefficients,
        se_clustered,
        r_squared: r2,
        n_obs: design.n_obs(),
        n_clusters: design.n_clusters(),
        n_params: design.n_params(),
        reference_levels,
        covariate_means,
        sweeps: sol.sweeps,
        flagged_terms: cov.flagged.clone(),
        warnings,
        beta: sol.beta,
        covariance: Some(cov.covariance),
        residuals,
    })
}

/// Build the design for `spec` and fit it.
pub fn fit(rows: &[MetricRow], spec: &ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    let design = build_design(rows, spec, opts.drop_single_level)?;
    fit_design(&design, spec, opts)
}
