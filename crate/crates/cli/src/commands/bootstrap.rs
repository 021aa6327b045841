use std::path::PathBuf;

use phonostyle::metrics::MetricKind;
use phonostyle::stats::bootstrap_century;
use serde::Serialize;

use super::{json_bytes, load_rows, now, parse_metric, write_with, Context};
use crate::error::CliResult;
use crate::output::OutputSet;
use crate::BootstrapArgs;

#[derive(Debug, Serialize)]
struct Settings {
    metrics: PathBuf,
    replicates: usize,
    metric: Vec<MetricKind>,
}

pub fn run(ctx: &Context, a: BootstrapArgs) -> CliResult<()> {
    let started = now();
    let c = &ctx.config.bootstrap;
    let replicates = a.replicates.or(c.replicates).unwrap_or(1000);
    let metrics: Vec<MetricKind> = match a.metric_names.clone().or_else(|| c.metrics.clone()) {
        Some(names) => names.iter().map(|n| parse_metric(n)).collect::<CliResult<_>>()?,
        None => MetricKind::ALL.to_vec(),
    };
    let rows = load_rows(&a.metrics)?;
    let trend = bootstrap_century(&rows, &metrics, replicates, ctx.seed)?;
    let settings = Settings {
        metrics: a.metrics.clone(),
        replicates,
        metric: metrics,
    };
    let mut out = OutputSet::new();
    out.add(a.out.join("trends.json"), json_bytes(&trend)?);
    out.add(a.out.join("trends.csv"), write_with(|b| trend.write_csv(b))?);
    ctx.finish("bootstrap", &settings, vec![a.metrics.clone()], out, started)
}
