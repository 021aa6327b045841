use std::path::PathBuf;

use phonostyle::stats::{
    effect_correlation, estimator, fit, nested_r2, within_meter_effects, EffectCorrelation, FitOptions, FitResult,
    ModelSpec, NestedLedger, WithinMeterTable,
};
use serde::Serialize;

use super::{json_bytes, load_rows, now, parse_metric, require_input, Context};
use crate::error::{CliError, CliResult};
use crate::output::OutputSet;
use crate::FitArgs;

#[derive(Debug, Serialize)]
struct Settings {
    metrics: PathBuf,
    mode: &'static str,
    spec: Option<ModelSpec>,
    outcome: String,
    meters: Vec<String>,
    min_cell: usize,
    options: FitOptions,
}

#[derive(Debug, Default, Serialize)]
struct FitOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nested: Option<NestedLedger>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    within_meter: Vec<WithinMeterTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    effect_correlation: Option<EffectCorrelation>,
}

fn parse_spec(arg: &str) -> CliResult<(ModelSpec, Option<PathBuf>)> {
    let (text, path) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), None)
    } else {
        let p = PathBuf::from(arg);
        require_input(&p)?;
        let t = std::fs::read_to_string(&p).map_err(|e| CliError::io(p.display(), e))?;
        (t, Some(p))
    };
    let spec: ModelSpec =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("model spec: {e}")))?;
    spec.validate()?;
    Ok((spec, path))
}

pub fn fit_options(ctx: &Context, estimator_flag: Option<&str>, tol: Option<f64>, max_sweeps: Option<usize>) -> CliResult<FitOptions> {
    let c = &ctx.config.fit;
    let mut opts = FitOptions::default();
    if let Some(e) = estimator_flag.or(c.estimator.as_deref()) {
        opts.estimator = e.to_string();
    }
    estimator(&opts.estimator)?;
    if let Some(t) = tol.or(c.tol) {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::config(format!("tolerance must be positive, got {t}")));
        }
        opts.solve.tol = t;
    }
    if let Some(s) = max_sweeps.or(c.max_sweeps) {
        opts.solve.max_sweeps = s;
    }
    Ok(opts)
}

pub fn run(ctx: &Context, a: FitArgs) -> CliResult<()> {
    let started = now();
    let opts = fit_options(ctx, a.estimator.as_deref(), a.tol, a.max_sweeps)?;
    let outcome_name = a.outcome.clone().unwrap_or_else(|| "hardness".into());
    let outcome = parse_metric(&outcome_name)?;
    let min_cell = a.min_cell.or(ctx.config.fit.min_cell).unwrap_or(2000);
    let mut inputs = vec![a.metrics.clone()];
    let spec = match &a.spec {
        Some(s) => {
            let (spec, path) = parse_spec(s)?;
            inputs.extend(path);
            Some(spec)
        }
        None => None,
    };
    let meters = a.within_meter.clone().unwrap_or_default();
    let mode = if a.nested {
        "nested"
    } else if !meters.is_empty() {
        "within-meter"
    } else {
        "primary"
    };
    let rows = load_rows(&a.metrics)?;

    let mut result = FitOutput::default();
    match mode {
        "nested" => result.nested = Some(nested_r2(&rows, outcome, &opts)?),
        "within-meter" => {
            for m in &meters {
                result.within_meter.push(within_meter_effects(&rows, m, outcome, min_cell, &opts)?);
            }
            if result.within_meter.len() >= 2 {
                result.effect_correlation = Some(effect_correlation(&result.within_meter)?);
            }
        }
        _ => {
            let s = spec.clone().unwrap_or_else(|| ModelSpec::primary(outcome));
            result.fit = Some(fit(&rows, &s, &opts)?);
        }
    }

    let settings = Settings {
        metrics: a.metrics.clone(),
        mode,
        spec,
        outcome: outcome_name,
        meters,
        min_cell,
        options: opts,
    };
    let mut out = OutputSet::new();
    out.add(a.out.clone(), json_bytes(&result)?);
    ctx.finish("fit", &settings, inputs, out, started)
}
