//! Model families built on [`fit`]: the nested variance ledger, within-meter
//! poet effects, their cross-meter agreement and the century regression.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricKind, MetricRow};
use crate::numeric::{mean, pearson, sample_sd};
use crate::stats::{build_design, fit, fit_design, Covariate, Factor, FitOptions, FitResult, ModelSpec};

const LENGTH: [Covariate; 2] = [Covariate::NSymbols, Covariate::NTokens];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedEntry {
    pub model: String,
    pub fixed_effects: Vec<Factor>,
    pub covariates: Vec<Covariate>,
    pub r_squared: f64,
    /// Increment over the previous entry (over 0 for the first).
    pub delta_r2: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedLedger {
    pub outcome: MetricKind,
    pub entries: Vec<NestedEntry>,
    pub warnings: Vec<String>,
}

/// Intercept, then length controls, then meter and form, then poet.
pub fn nested_specs(outcome: MetricKind) -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("intercept", ModelSpec::new(outcome, vec![], vec![])),
        ("length", ModelSpec::new(outcome, vec![], LENGTH.to_vec())),
        ("length+meter+form", ModelSpec::new(outcome, vec![Factor::Meter, Factor::Form], LENGTH.to_vec())),
        (
            "length+meter+form+poet",
            ModelSpec::new(outcome, vec![Factor::Meter, Factor::Form, Factor::Poet], LENGTH.to_vec()),
        ),
    ]
}

/// R² of the nested specifications on one common sample.
pub fn nested_r2(rows: &[MetricRow], outcome: MetricKind, opts: &FitOptions) -> Result<NestedLedger> {
    let opts = FitOptions {
        drop_single_level: true,
        ..opts.clone()
    };
    let mut entries: Vec<NestedEntry> = Vec::new();
    let mut warnings = Vec::new();
    for (name, spec) in nested_specs(outcome) {
        let res = fit(rows, &spec, &opts)?;
        let prev = entries.last().map_or(0.0, |e| e.r_squared);
        warnings.extend(res.warnings.iter().map(|w| format!("{name}: {w}")));
        entries.push(NestedEntry {
            model: name.to_string(),
            fixed_effects: spec.fixed_effects.clone(),
            covariates: spec.covariates.clone(),
            r_squared: res.r_squared,
            delta_r2: res.r_squared - prev,
            n_obs: res.n_obs,
        });
    }
    Ok(NestedLedger {
        outcome,
        entries,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinMeterTable {
    pub meter: String,
    pub outcome: MetricKind,
    pub n_obs: usize,
    /// Sample SD of the outcome over the estimation sample.
    pub pooled_sd: f64,
    pub reference_poet: String,
    /// Poet coefficient divided by `pooled_sd`; the reference poet is 0.
    pub effects: BTreeMap<String, f64>,
    pub raw_effects: BTreeMap<String, f64>,
    pub se_standardized: BTreeMap<String, f64>,
    /// Poets below the cell threshold in this meter, with their counts.
    pub unsupported: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Poet effects inside one meter, controlling for form and length, in
/// pooled-SD units.
pub fn within_meter_effects(
    rows: &[MetricRow],
    meter: &str,
    outcome: MetricKind,
    min_cell_mesras: usize,
    opts: &FitOptions,
) -> Result<WithinMeterTable> {
    let in_meter: Vec<&MetricRow> = rows
        .iter()
        .filter(|r| r.meter == meter && r.metrics.get(outcome).is_some())
        .collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &in_meter {
        *counts.entry(r.poet_id.as_str()).or_default() += 1;
    }
    let unsupported: BTreeMap<String, usize> = counts
        .iter()
        .filter(|(_, &n)| n < min_cell_mesras)
        .map(|(p, &n)| (p.to_string(), n))
        .collect();
    let sample: Vec<MetricRow> = in_meter
        .into_iter()
        .filter(|r| !unsupported.contains_key(&r.poet_id))
        .cloned()
        .collect();
    let supported = counts.len() - unsupported.len();
    if supported < 2 {
        return Err(Error::Invalid(format!(
            "meter {meter}: {supported} poet(s) reach {min_cell_mesras} mesras on {outcome}; need at least 2"
        )));
    }

    let mut spec = ModelSpec::new(outcome, vec![Factor::Poet, Factor::Form], LENGTH.to_vec());
    spec.subset = Some(meter.to_string());
    let opts = FitOptions {
        drop_single_level: true,
        ..opts.clone()
    };
    let mut design = build_design(&sample, &spec, true)?;
    let mut form_note = None;
    let res = match fit_design(&design, &spec, &opts) {
        Err(Error::RankDeficient(cols)) if cols.iter().any(|c| c.starts_with("form:")) => {
            // Form nested in poet inside this meter: poet effects absorb it.
            spec.fixed_effects.retain(|f| *f != Factor::Form);
            design = build_design(&sample, &spec, true)?;
            form_note = Some(format!(
                "meter {meter}: form is collinear with poet ({}); form dropped",
                cols.join(", ")
            ));
            fit_design(&design, &spec, &opts)?
        }
        other => other?,
    };
    let mut warnings = res.warnings.clone();
    warnings.extend(form_note);
    let pooled_sd = sample_sd(&design.y).filter(|s| *s > 0.0).ok_or_else(|| {
        Error::Invalid(format!("meter {meter}: {outcome} has zero variance"))
    })?;
    let raw_effects = res.factor_effects(Factor::Poet);
    let effects = raw_effects.iter().map(|(p, v)| (p.clone(), v / pooled_sd)).collect();
    let se_standardized = raw_effects
        .keys()
        .filter_map(|p| res.se(&format!("poet:{p}")).map(|s| (p.clone(), s / pooled_sd)))
        .collect();
    Ok(WithinMeterTable {
        meter: meter.to_string(),
        outcome,
        n_obs: res.n_obs,
        pooled_sd,
        reference_poet: res.reference_levels["poet"].clone(),
        effects,
        raw_effects,
        se_standardized,
        unsupported,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeterPair {
    pub a: String,
    pub b: String,
    pub n_shared: usize,
    /// None when fewer than 3 poets are shared or an effect vector is constant.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCorrelation {
    pub outcome: MetricKind,
    pub pairs: Vec<MeterPair>,
    pub mean_r: Option<f64>,
    pub n_pairs_used: usize,
}

/// Pearson agreement of standardized poet effects across every meter pair.
pub fn effect_correlation(tables: &[WithinMeterTable]) -> Result<EffectCorrelation> {
    let outcome = match tables.first() {
        Some(t) => t.outcome,
        None => return Err(Error::Invalid("no within-meter tables to correlate".into())),
    };
    if tables.iter().any(|t| t.outcome != outcome) {
        return Err(Error::Invalid("within-meter tables mix outcomes".into()));
    }
    let mut pairs = Vec::new();
    for (i, a) in tables.iter().enumerate() {
        for b in &tables[i + 1..] {
            let shared: Vec<&String> = a.effects.keys().filter(|p| b.effects.contains_key(*p)).collect();
            let xs: Vec<f64> = shared.iter().map(|p| a.effects[*p]).collect();
            let ys: Vec<f64> = shared.iter().map(|p| b.effects[*p]).collect();
            let r = if shared.len() >= 3 { pearson(&xs, &ys) } else { None };
            pairs.push(MeterPair {
                a: a.meter.clone(),
                b: b.meter.clone(),
                n_shared: shared.len(),
                r,
            });
        }
    }
    let used: Vec<f64> = pairs.iter().filter_map(|p| p.r).collect();
    Ok(EffectCorrelation {
        outcome,
        mean_r: mean(&used),
        n_pairs_used: used.len(),
        pairs,
    })
}

/// Century fixed effects with only the length controls.
pub fn century_trend(rows: &[MetricRow], outcome: MetricKind, opts: &FitOptions) -> Result<FitResult> {
    let spec = ModelSpec::new(outcome, vec![Factor::Century], LENGTH.to_vec());
    fit(rows, &spec, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricVector;

    fn row(poet: &str, poem: usize, line: usize, meter: &str, y: f64) -> MetricRow {
        MetricRow {
            mesra_id: format!("{poet}/{poem}/{line}"),
            poet_id: poet.into(),
            poem_id: poem.to_string(),
            line_index: line as u32,
            century: Some(5 + (poet.len() % 3) as i32),
            meter: meter.into(),
            form: if poem % 2 == 0 { "ghazal" } else { "masnavi" }.into(),
            metrics: MetricVector {
                hardness: y,
                sonority: 3.0,
                sibilance: Some(0.1),
                vowel_ratio: 0.4,
                cluster_ratio: 0.1,
                entropy: 3.0,
                n_symbols: 20 + (line * 7) % 5,
                n_tokens: 4 + line % 3,
            },
        }
    }

    fn corpus(effects: &[(&str, f64)], meters: &[(&str, f64)]) -> Vec<MetricRow> {
        let mut out = Vec::new();
        for (pi, (p, pe)) in effects.iter().enumerate() {
            for (mi, (m, me)) in meters.iter().enumerate() {
                for poem in 0..6 {
                    for line in 0..10 {
                        let noise = (((pi * 7 + mi * 3 + poem * 5 + line * 11) % 13) as f64 - 6.0) * 0.01;
                        out.push(row(p, mi * 100 + poem, line, m, 2.0 + pe + me + noise));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn nested_deltas_sum_to_final() {
        let rows = corpus(&[("a", 0.0), ("b", 0.3), ("c", -0.2), ("d", 0.1)], &[("M01", 0.0), ("M02", 0.4)]);
        let ledger = nested_r2(&rows, MetricKind::Hardness, &FitOptions::default()).unwrap();
        assert_eq!(ledger.entries.len(), 4);
        assert!(ledger.entries[0].r_squared.abs() < 1e-12);
        let total: f64 = ledger.entries.iter().map(|e| e.delta_r2).sum();
        assert!((total - ledger.entries[3].r_squared).abs() < 1e-12);
        assert!(ledger.entries.windows(2).all(|w| w[1].r_squared >= w[0].r_squared - 1e-12));
    }

    #[test]
    fn within_meter_drops_form_nested_in_poet() {
        let poets = [("a", 0.0), ("b", 0.3), ("c", -0.2)];
        let mut rows = corpus(&poets, &[("M01", 0.0)]);
        for r in &mut rows {
            r.form = if r.poet_id == "a" { "masnavi" } else { "ghazal" }.into();
        }
        for name in ["dense-qr", "absorb"] {
            let opts = FitOptions {
                estimator: name.into(),
                ..FitOptions::default()
            };
            let t = within_meter_effects(&rows, "M01", MetricKind::Hardness, 10, &opts).unwrap();
            assert!(t.warnings.iter().any(|w| w.contains("form dropped")), "{name}: {:?}", t.warnings);
            assert!((t.raw_effects["b"] - 0.3).abs() < 0.05, "{name}");
        }
    }

    #[test]
    fn within_meter_recovers_ranking_and_correlates() {
        let poets = [("a", 0.0), ("b", 0.3), ("c", -0.2), ("d", 0.1), ("e", 0.5)];
        let rows = corpus(&poets, &[("M01", 0.0), ("M02", 0.4), ("M03", -0.1)]);
        let tables: Vec<_> = ["M01", "M02", "M03"]
            .iter()
            .map(|m| within_meter_effects(&rows, m, MetricKind::Hardness, 10, &FitOptions::default()).unwrap())
            .collect();
        assert_eq!(tables[0].reference_poet, "a");
        assert_eq!(tables[0].effects["a"], 0.0);
        let corr = effect_correlation(&tables).unwrap();
        assert_eq!(corr.pairs.len(), 3);
        assert!(corr.mean_r.unwrap() > 0.95, "{corr:?}");
    }

    #[test]
    fn within_meter_excludes_thin_poets() {
        let mut rows = corpus(&[("a", 0.0), ("b", 0.3), ("c", 0.1)], &[("M01", 0.0)]);
        rows.retain(|r| r.poet_id != "c" || r.line_index < 2);
        let t = within_meter_effects(&rows, "M01", MetricKind::Hardness, 20, &FitOptions::default()).unwrap();
        assert_eq!(t.unsupported.get("c"), Some(&12));
        assert!(!t.effects.contains_key("c"));
        assert!(within_meter_effects(&rows, "M01", MetricKind::Hardness, 1000, &FitOptions::default()).is_err());
    }
}
