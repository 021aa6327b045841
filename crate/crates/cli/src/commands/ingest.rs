use std::collections::BTreeSet;
use std::path::PathBuf;

use phonostyle::corpus::{
    build_cohort, ingest_files, write_cohort, AliasTable, CenturyMap, CohortSpec, DelimiterSpec, IngestConfig,
    MeterMap, StreamSource,
};
use phonostyle::phonology::{ParseMode, RuleTable};
use serde::Serialize;

use super::{json_bytes, load_features, now, parse_policy, require_input, write_with, Context};
use crate::error::{CliError, CliResult};
use crate::output::OutputSet;
use crate::IngestArgs;

#[derive(Debug, Serialize)]
struct Settings {
    corpus: Vec<PathBuf>,
    aliases: Option<PathBuf>,
    meters: Option<PathBuf>,
    centuries: Option<PathBuf>,
    mode: ParseMode,
    features: Option<PathBuf>,
    rules: Option<PathBuf>,
    unknown: String,
    boundary: String,
    delimiter: char,
    mesra_delimiters: Vec<char>,
    cohort: CohortSpec,
}

pub fn run(ctx: &Context, a: IngestArgs) -> CliResult<()> {
    let started = now();
    let c = &ctx.config.ingest;
    let mut spec = CohortSpec::default();
    if let Some(n) = a.min_cell.or(c.min_cell) {
        spec.min_cell_mesras = n;
    }
    if let Some(m) = a.retained_meters.clone().or_else(|| c.retained_meters.clone()) {
        spec.retained_meters = m.into_iter().collect::<BTreeSet<_>>();
    }
    spec.require_form = !a.allow_missing_form && c.require_form.unwrap_or(true);
    spec.require_meter = !a.allow_missing_meter && c.require_meter.unwrap_or(true);
    spec.validate()?;

    let mode: ParseMode = a.mode.as_deref().or(c.mode.as_deref()).map(str::parse).transpose()?.unwrap_or_default();
    let unknown = a.unknown.clone().or_else(|| c.unknown.clone()).unwrap_or_else(|| "strict".into());
    let policy = parse_policy(Some(&unknown))?;
    let delimiter = a.delimiter.or(c.delimiter).unwrap_or('\t');
    if !delimiter.is_ascii() {
        return Err(CliError::config(format!("field delimiter `{delimiter}` is not ASCII")));
    }
    let mesra_delimiters: Vec<char> = match a.mesra_delimiters.as_deref().or(c.mesra_delimiters.as_deref()) {
        Some(s) => s.chars().collect(),
        None => DelimiterSpec::default().chars().to_vec(),
    };
    let settings = Settings {
        corpus: a.corpus.clone(),
        aliases: a.aliases.clone().or_else(|| c.aliases.clone()),
        meters: a.meters.clone().or_else(|| c.meters.clone()),
        centuries: a.centuries.clone().or_else(|| c.centuries.clone()),
        mode,
        features: a.features.clone().or_else(|| c.features.clone()),
        rules: a.rules.clone().or_else(|| c.rules.clone()),
        unknown,
        boundary: a.boundary.clone().or_else(|| c.boundary.clone()).unwrap_or_else(|| "#".into()),
        delimiter,
        mesra_delimiters: mesra_delimiters.clone(),
        cohort: spec.clone(),
    };

    let mut inputs = settings.corpus.clone();
    for p in [&settings.aliases, &settings.meters, &settings.centuries, &settings.features, &settings.rules]
        .into_iter()
        .flatten()
    {
        inputs.push(p.clone());
    }
    for p in &inputs {
        require_input(p)?;
    }

    let source = match mode {
        ParseMode::Prephonemized => StreamSource::prephonemized(settings.boundary.clone()),
        ParseMode::RuleG2p => {
            let table = load_features(settings.features.as_deref())?;
            let rules = match &settings.rules {
                Some(p) => RuleTable::load(p)?,
                None => RuleTable::default_rules(),
            };
            StreamSource::rule_g2p(table, rules, policy)?
        }
    };
    let config = IngestConfig {
        delimiter: delimiter as u8,
        mesra_delimiters: DelimiterSpec::new(mesra_delimiters)?,
        aliases: match &settings.aliases {
            Some(p) => AliasTable::load(p)?,
            None => AliasTable::default(),
        },
        meters: match &settings.meters {
            Some(p) => MeterMap::load(p)?,
            None => MeterMap::default_map(),
        },
        centuries: match &settings.centuries {
            Some(p) => CenturyMap::load(p)?,
            None => CenturyMap::default(),
        },
        source,
    };

    let ingested = ingest_files(&settings.corpus, &config)?;
    if !ingested.unlisted_poets.is_empty() {
        log::warn!("{} poet name(s) not in the alias table were slugged", ingested.unlisted_poets.len());
    }
    let n_rejected = ingested.rejected.len();
    let n_duplicates = ingested.duplicates.len();
    let (cohort, mut attrition) = build_cohort(ingested.records, &spec)?;
    attrition.rejected_rows = n_rejected;
    attrition.duplicate_rows = n_duplicates;

    let rejects = {
        let mut s = String::from("source\trow\tkind\treason\n");
        for (kind, list) in [("rejected", &ingested.rejected), ("duplicate", &ingested.duplicates)] {
            for r in list.iter() {
                let reason = r.reason.replace(['\t', '\n'], " ");
                s.push_str(&format!("{}\t{}\t{kind}\t{reason}\n", r.source, r.row));
            }
        }
        s.into_bytes()
    };

    let mut out = OutputSet::new();
    out.add(a.out.join("cohort.tsv"), write_with(|b| write_cohort(b, &cohort))?);
    out.add(a.out.join("attrition.json"), json_bytes(&attrition)?);
    out.add(a.out.join("rejects.tsv"), rejects);
    ctx.finish("ingest", &settings, inputs, out, started)
}
