//! Design matrices in factor form: each row carries one level code per
//! categorical factor plus its centered covariates. Dummy columns are never
//! materialized except by [`Design::to_dense`].

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::MetricRow;
use crate::numeric::NeumaierSum;
use crate::stats::{Covariate, Factor, ModelSpec};

#[derive(Debug, Clone)]
pub struct FactorColumn {
    pub factor: Factor,
    /// Sorted levels; `levels[0]` is the reference.
    pub levels: Vec<String>,
    /// Per-row index into `levels`.
    pub codes: Vec<u32>,
}

impl FactorColumn {
    pub fn reference(&self) -> &str {
        &self.levels[0]
    }

    fn from_values(factor: Factor, values: Vec<String>) -> Result<Self> {
        let levels: Vec<String> = values.iter().collect::<BTreeSet<_>>().into_iter().cloned().collect();
        if levels.len() < 2 {
            return Err(Error::SingleLevel(factor.name().to_string()));
        }
        let index: BTreeMap<&str, u32> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
        let codes = values.iter().map(|v| index[v.as_str()]).collect();
        Ok(FactorColumn { factor, levels, codes })
    }
}

#[derive(Debug, Clone)]
pub struct Design {
    pub y: Vec<f64>,
    pub factors: Vec<FactorColumn>,
    pub covariates: Vec<(Covariate, Vec<f64>)>,
    pub covariate_means: Vec<f64>,
    /// Per-row cluster index into `cluster_names`.
    pub clusters: Vec<u32>,
    pub cluster_names: Vec<String>,
    pub column_names: Vec<String>,
    /// Column offset of each factor's first dummy.
    factor_offsets: Vec<usize>,
    covariate_offset: usize,
    pub warnings: Vec<String>,
}

impl Design {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_params(&self) -> usize {
        self.column_names.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.cluster_names.len()
    }

    pub fn covariate_offset(&self) -> usize {
        self.covariate_offset
    }

    pub fn factor_offset(&self, f: usize) -> usize {
        self.factor_offsets[f]
    }

    /// Visit the non-zero entries of row `i` as (column, value).
    #[inline]
    pub fn for_each_entry(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        f(0, 1.0);
        for (fc, off) in self.factors.iter().zip(&self.factor_offsets) {
            let code = fc.codes[i] as usize;
            if code > 0 {
                f(off + code - 1, 1.0);
            }
        }
        for (j, (_, col)) in self.covariates.iter().enumerate() {
            f(self.covariate_offset + j, col[i]);
        }
    }

    /// Dense row-major model matrix (intercept, dummies, covariates).
    pub fn to_dense(&self) -> Matrix {
        let k = self.n_params();
        let mut m = Matrix::zeros(self.n_obs(), k);
        for i in 0..self.n_obs() {
            self.for_each_entry(i, |c, v| m[(i, c)] = v);
        }
        m
    }

    /// Fitted values for a coefficient vector in column order.
    pub fn predict(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n_obs())
            .map(|i| {
                let mut s = 0.0;
                self.for_each_entry(i, |c, v| s += beta[c] * v);
                s
            })
            .collect()
    }
}

fn factor_value(row: &MetricRow, f: Factor) -> Option<String> {
    match f {
        Factor::Poet => Some(row.poet_id.clone()),
        Factor::Meter => Some(row.meter.clone()),
        Factor::Form => Some(row.form.clone()),
        Factor::Century => row.century.map(|c| c.to_string()),
    }
}

fn covariate_value(row: &MetricRow, c: Covariate) -> f64 {
    match c {
        Covariate::NSymbols => row.metrics.n_symbols as f64,
        Covariate::NTokens => row.metrics.n_tokens as f64,
    }
}

/// Build the design for `spec` over `rows`.
///
/// Rows outside the meter subset, with a missing outcome, or with a missing
/// factor value (century) are dropped. Row order follows (poet, poem, line).
/// With `drop_single_level`, factors that collapse to one level are removed
/// with a warning instead of failing.
pub fn build_design(rows: &[MetricRow], spec: &ModelSpec, drop_single_level: bool) -> Result<Design> {
    spec.validate()?;
    let mut selected: Vec<&MetricRow> = rows
        .iter()
        .filter(|r| spec.subset.as_ref().is_none_or(|m| &r.meter == m))
        .filter(|r| r.metrics.get(spec.outcome).is_some())
        .filter(|r| spec.fixed_effects.iter().all(|f| factor_value(r, *f).is_some()))
        .collect();
    selected.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    if selected.is_empty() {
        return Err(Error::Invalid(format!("no rows for model on {}", spec.outcome)));
    }

    let mut warnings = Vec::new();
    let mut factors = Vec::new();
    for &f in &spec.fixed_effects {
        let values: Vec<String> = selected.iter().map(|r| factor_value(r, f).unwrap()).collect();
        match FactorColumn::from_values(f, values) {
            Ok(col) => factors.push(col),
            Err(Error::SingleLevel(name)) if drop_single_level => {
                warnings.push(format!("factor `{name}` has a single level in this sample and was dropped"));
            }
            Err(e) => return Err(e),
        }
    }

    let mut covariates = Vec::new();
    let mut covariate_means = Vec::new();
    for &c in &spec.covariates {
        let raw: Vec<f64> = selected.iter().map(|r| covariate_value(r, c)).collect();
        let mean = raw.iter().copied().collect::<NeumaierSum>().value() / raw.len() as f64;
        covariates.push((c, raw.iter().map(|x| x - mean).collect()));
        covariate_means.push(mean);
    }

    let mut column_names = vec!["intercept".to_string()];
    let mut factor_offsets = Vec::new();
    for fc in &factors {
        factor_offsets.push(column_names.len());
        column_names.extend(fc.levels[1..].iter().map(|l| term_name(fc.factor, l)));
    }
    let covariate_offset = column_names.len();
    column_names.extend(spec.covariates.iter().map(|c| c.name().to_string()));

    let cluster_keys: Vec<String> = selected.iter().map(|r| r.poem_key()).collect();
    let cluster_names: Vec<String> = cluster_keys.iter().collect::<BTreeSet<_>>().into_iter().cloned().collect();
    let cindex: BTreeMap<&str, u32> = cluster_names.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
    let clusters = cluster_keys.iter().map(|k| cindex[k.as_str()]).collect();

    let y = selected.iter().map(|r| r.metrics.get(spec.outcome).unwrap()).collect();
    let design = Design {
        y,
        factors,
        covariates,
        covariate_means,
        clusters,
        cluster_names,
        column_names,
        factor_offsets,
        covariate_offset,
        warnings,
    };
    if design.n_obs() <= design.n_params() {
        return Err(Error::Invalid(format!(
            "{} observations cannot identify {} parameters",
            design.n_obs(),
            design.n_params()
        )));
    }
    Ok(design)
}

pub fn term_name(f: Factor, level: &str) -> String {
    format!("{}:{}", f.name(), level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricKind, MetricVector};

    pub(crate) fn row(poet: &str, poem: &str, line: u32, meter: &str, form: &str, y: f64, nsym: usize) -> MetricRow {
        MetricRow {
            mesra_id: format!("{poet}/{poem}/{line}"),
            poet_id: poet.into(),
            poem_id: poem.into(),
            line_index: line,
            century: None,
            meter: meter.into(),
            form: form.into(),
            metrics: MetricVector {
                hardness: y,
                sonority: 3.0,
                sibilance: None,
                vowel_ratio: 0.4,
                cluster_ratio: 0.1,
                entropy: 3.0,
                n_symbols: nsym,
                n_tokens: nsym / 4 + 1,
            },
        }
    }

    fn spec(fe: Vec<Factor>) -> ModelSpec {
        ModelSpec::new(MetricKind::Hardness, fe, vec![Covariate::NSymbols])
    }

    #[test]
    fn k_levels_give_k_minus_one_dummies() {
        let mut rows = Vec::new();
        for (i, p) in ["c", "a", "b"].iter().enumerate() {
            for j in 0..4 {
                let m = if j % 2 == 0 { "M01" } else { "M02" };
                rows.push(row(p, &format!("{i}"), j, m, "ghazal", j as f64, 20 + j as usize));
            }
        }
        let d = build_design(&rows, &spec(vec![Factor::Poet, Factor::Meter]), false).unwrap();
        assert_eq!(d.column_names, ["intercept", "poet:b", "poet:c", "meter:M02", "n_symbols"]);
        assert_eq!(d.factors[0].reference(), "a");
        let dense = d.to_dense();
        // Row 0 is poet a (reference), meter M01 (reference).
        assert_eq!(dense.row(0)[..4], [1.0, 0.0, 0.0, 0.0]);
        let mean: f64 = dense.column(4).iter().sum::<f64>() / 12.0;
        assert!(mean.abs() < 1e-12, "covariates are centered");
    }

    #[test]
    fn single_level_factor() {
        let rows: Vec<_> = (0..5).map(|j| row("a", "1", j, "M01", "ghazal", j as f64, 20)).collect();
        let err = build_design(&rows, &spec(vec![Factor::Meter]), false).unwrap_err();
        assert!(matches!(err, Error::SingleLevel(f) if f == "meter"));
        let d = build_design(&rows, &spec(vec![Factor::Meter]), true).unwrap();
        assert!(d.factors.is_empty() && d.warnings.len() == 1);
    }

    #[test]
    fn subset_excludes_meter_factor() {
        let mut s = spec(vec![Factor::Meter]);
        s.subset = Some("M01".into());
        assert!(build_design(&[], &s, false).is_err());
    }
}
