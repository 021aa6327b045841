use std::path::PathBuf;

use phonostyle::corpus::AttritionReport;
use phonostyle::report::{build_report, ReportConfig};
use serde::Serialize;

use super::fit::fit_options;
use super::{json_bytes, load_rows, now, require_input, Context};
use crate::error::{CliError, CliResult, ErrorClass};
use crate::output::OutputSet;
use crate::ReportArgs;

#[derive(Debug, Serialize)]
struct Settings {
    metrics: PathBuf,
    attrition: Option<PathBuf>,
    report: ReportConfig,
}

pub fn run(ctx: &Context, a: ReportArgs) -> CliResult<()> {
    let started = now();
    let c = &ctx.config.report;
    let mut cfg = ReportConfig {
        seed: ctx.seed,
        fit: fit_options(ctx, a.estimator.as_deref().or(c.estimator.as_deref()), None, None)?,
        ..ReportConfig::default()
    };
    if let Some(r) = a.replicates.or(c.replicates) {
        cfg.replicates = r;
    }
    if let Some(m) = a.min_cell.or(c.min_cell) {
        cfg.min_cell_mesras = m;
    }
    let mut inputs = vec![a.metrics.clone()];
    let attrition: Option<AttritionReport> = match &a.attrition {
        Some(p) => {
            require_input(p)?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p.display(), e))?;
            inputs.push(p.clone());
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::new(ErrorClass::Schema, format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let rows = load_rows(&a.metrics)?;
    let report = build_report(&rows, attrition, &cfg)?;
    for s in &report.skipped {
        log::info!("skipped {}: {}", s.analysis, s.reason);
    }
    let settings = Settings {
        metrics: a.metrics.clone(),
        attrition: a.attrition.clone(),
        report: cfg,
    };
    let mut out = OutputSet::new();
    out.add(a.out.clone(), json_bytes(&report)?);
    ctx.finish("report", &settings, inputs, out, started)
}
