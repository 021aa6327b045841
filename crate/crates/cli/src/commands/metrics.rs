use std::path::PathBuf;

use phonostyle::corpus::read_cohort;
use phonostyle::metrics::compute_rows;
use phonostyle::metrics::rows::write_rows;
use phonostyle::phonology::UnknownPolicy;
use serde::Serialize;

use super::{load_features, now, parse_policy, require_input, write_with, Context};
use crate::error::CliResult;
use crate::output::OutputSet;
use crate::MetricsArgs;

#[derive(Debug, Serialize)]
struct Settings {
    cohort: PathBuf,
    features: Option<PathBuf>,
    feature_table_version: String,
    unknown: UnknownPolicy,
}

/// `<stem>.rejects.tsv` beside the metrics file.
pub fn rejects_path(out: &std::path::Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_else(|| "metrics".into());
    out.with_file_name(format!("{stem}.rejects.tsv"))
}

pub fn run(ctx: &Context, a: MetricsArgs) -> CliResult<()> {
    let started = now();
    let c = &ctx.config.metrics;
    let features = a.features.clone().or_else(|| c.features.clone());
    let policy = parse_policy(a.unknown.as_deref().or(c.unknown.as_deref()))?;
    require_input(&a.cohort)?;
    let table = load_features(features.as_deref())?;
    let records = read_cohort(&a.cohort, table.boundary_symbol())?;
    let (rows, rejects) = compute_rows(&records, &table, policy)?;
    log::info!("scored {} of {} mesras", rows.len(), records.len());

    let mut rej = String::from("mesra_id\treason\n");
    for r in &rejects {
        rej.push_str(&format!("{}\t{}\n", r.mesra_id, r.reason.replace(['\t', '\n'], " ")));
    }
    let settings = Settings {
        cohort: a.cohort.clone(),
        features: features.clone(),
        feature_table_version: table.version().to_string(),
        unknown: policy,
    };
    let mut inputs = vec![a.cohort.clone()];
    inputs.extend(features);
    let mut out = OutputSet::new();
    out.add(a.out.clone(), write_with(|b| write_rows(b, &rows))?);
    out.add(rejects_path(&a.out), rej.into_bytes());
    ctx.finish("metrics", &settings, inputs, out, started)
}
