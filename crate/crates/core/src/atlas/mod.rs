//! Poet fingerprints, meter summaries and the PCA stylistic space.

pub mod svg;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::maps::meter_display_name;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::metrics::{MetricKind, MetricRow};
use crate::numeric::{mean, sample_sd, NeumaierSum};

pub use svg::{render_fingerprint, render_space, Viewport, FINGERPRINTS_PER_PAGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoetProfile {
    pub poet_id: String,
    /// Raw means in [`MetricKind::ALL`] order; `None` only for a metric with
    /// no defined rows.
    pub raw: Vec<Option<f64>>,
    /// Min-max normalized across poets, same order as `raw`.
    pub normalized: Vec<Option<f64>>,
    pub n_mesras: usize,
    pub n_poems: usize,
}

impl PoetProfile {
    pub fn raw_of(&self, m: MetricKind) -> Option<f64> {
        self.raw[metric_index(m)]
    }

    pub fn normalized_of(&self, m: MetricKind) -> Option<f64> {
        self.normalized[metric_index(m)]
    }
}

fn metric_index(m: MetricKind) -> usize {
    MetricKind::ALL.iter().position(|k| *k == m).unwrap()
}

/// Per-metric means over `rows`, skipping undefined values.
fn metric_means<'a>(rows: impl Iterator<Item = &'a MetricRow>) -> Vec<Option<f64>> {
    let mut acc = vec![(NeumaierSum::new(), 0usize); MetricKind::ALL.len()];
    for r in rows {
        for (slot, m) in acc.iter_mut().zip(MetricKind::ALL) {
            if let Some(v) = r.metrics.get(m) {
                slot.0.add(v);
                slot.1 += 1;
            }
        }
    }
    acc.iter().map(|(s, n)| (*n > 0).then(|| s.value() / *n as f64)).collect()
}

fn group_by<K: Ord>(rows: &[MetricRow], key: impl Fn(&MetricRow) -> K) -> BTreeMap<K, Vec<&MetricRow>> {
    let mut out: BTreeMap<K, Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        out.entry(key(r)).or_default().push(r);
    }
    out
}

/// Mesra-level means per poet, min-max normalized per metric across poets.
/// A metric that is constant across poets normalizes to 0.5.
pub fn poet_profiles(rows: &[MetricRow]) -> Result<Vec<PoetProfile>> {
    let groups: Vec<(&str, Vec<&MetricRow>)> = group_by(rows, |r| r.poet_id.clone())
        .into_values()
        .map(|v| (v[0].poet_id.as_str(), v))
        .collect();
    if groups.len() < 2 {
        return Err(Error::Invalid(format!(
            "normalization needs at least 2 poets, found {}",
            groups.len()
        )));
    }
    let mut profiles: Vec<PoetProfile> = groups
        .par_iter()
        .map(|(poet, rs)| {
            let mut poems: Vec<&str> = rs.iter().map(|r| r.poem_id.as_str()).collect();
            poems.sort_unstable();
            poems.dedup();
            PoetProfile {
                poet_id: poet.to_string(),
                raw: metric_means(rs.iter().copied()),
                normalized: Vec::new(),
                n_mesras: rs.len(),
                n_poems: poems.len(),
            }
        })
        .collect();
    for j in 0..MetricKind::ALL.len() {
        let defined: Vec<f64> = profiles.iter().filter_map(|p| p.raw[j]).collect();
        let lo = defined.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for p in &mut profiles {
            let v = p.raw[j].map(|x| if hi > lo { (x - lo) / (hi - lo) } else { 0.5 });
            p.normalized.push(v);
        }
    }
    Ok(profiles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeterProfile {
    pub meter: String,
    pub name: String,
    pub n_poems: usize,
    pub n_mesras: usize,
    pub hardness: f64,
    pub sonority: f64,
    pub sibilance: Option<f64>,
    pub entropy: f64,
}

/// Poem-level means per meter: each poem's rows are averaged first, then
/// poems are averaged with equal weight.
pub fn meter_profiles(rows: &[MetricRow]) -> Vec<MeterProfile> {
    let by_meter = group_by(rows, |r| r.meter.clone());
    by_meter
        .into_par_iter()
        .map(|(meter, rs)| {
            let poems = group_by_refs(&rs);
            let means: Vec<Vec<Option<f64>>> = poems.values().map(|p| metric_means(p.iter().copied())).collect();
            let over_poems = |m: MetricKind| {
                let j = metric_index(m);
                let vals: Vec<f64> = means.iter().filter_map(|v| v[j]).collect();
                mean(&vals)
            };
            MeterProfile {
                name: meter_display_name(&meter).to_string(),
                n_poems: poems.len(),
                n_mesras: rs.len(),
                hardness: over_poems(MetricKind::Hardness).unwrap_or(f64::NAN),
                sonority: over_poems(MetricKind::Sonority).unwrap_or(f64::NAN),
                sibilance: over_poems(MetricKind::Sibilance),
                entropy: over_poems(MetricKind::Entropy).unwrap_or(f64::NAN),
                meter,
            }
        })
        .collect()
}

fn group_by_refs<'a>(rows: &[&'a MetricRow]) -> BTreeMap<String, Vec<&'a MetricRow>> {
    let mut out: BTreeMap<String, Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.poem_key()).or_default().push(r);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoetCoordinates {
    pub poet_id: String,
    /// Scores on every component, PC1 first.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Metrics that entered the decomposition.
    pub metrics: Vec<MetricKind>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// `loadings[c][j]`: weight of metric `j` on component `c`.
    pub loadings: Vec<Vec<f64>>,
    pub coordinates: Vec<PoetCoordinates>,
    pub excluded_poets: Vec<String>,
    pub warnings: Vec<String>,
}

impl Projection {
    pub fn pc(&self, poet: &str) -> Option<(f64, f64)> {
        self.coordinates
            .iter()
            .find(|c| c.poet_id == poet)
            .map(|c| (c.scores[0], c.scores.get(1).copied().unwrap_or(0.0)))
    }
}

/// PCA of z-standardized poet means via the correlation matrix.
///
/// Components are sorted by eigenvalue; each loading vector is signed so
/// its largest-magnitude entry is positive.
pub fn pca_project(profiles: &[PoetProfile]) -> Result<Projection> {
    let mut warnings = Vec::new();
    let mut excluded_poets = Vec::new();
    let usable: Vec<&PoetProfile> = profiles
        .iter()
        .filter(|p| {
            let ok = p.raw.iter().all(Option::is_some);
            if !ok {
                excluded_poets.push(p.poet_id.clone());
            }
            ok
        })
        .collect();
    if !excluded_poets.is_empty() {
        warnings.push(format!("poets with an undefined metric excluded: {}", excluded_poets.join(", ")));
    }
    if usable.len() < 3 {
        return Err(Error::Invalid(format!("projection needs at least 3 poets, found {}", usable.len())));
    }
    let n = usable.len();

    let mut metrics = Vec::new();
    let mut means = Vec::new();
    let mut sds = Vec::new();
    let mut columns = Vec::new();
    for (j, m) in MetricKind::ALL.into_iter().enumerate() {
        let col: Vec<f64> = usable.iter().map(|p| p.raw[j].unwrap()).collect();
        let mu = mean(&col).unwrap();
        let sd = sample_sd(&col).unwrap_or(0.0);
        if sd.is_nan() || sd <= 1e-12 * mu.abs().max(1.0) {
            warnings.push(format!("{m} has no variance across poets and was dropped"));
            continue;
        }
        columns.push(col.iter().map(|x| (x - mu) / sd).collect::<Vec<f64>>());
        metrics.push(m);
        means.push(mu);
        sds.push(sd);
    }
    let p = metrics.len();
    if p == 0 {
        return Err(Error::Invalid("every metric is constant across poets".into()));
    }

    let mut corr = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let s = columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).collect::<NeumaierSum>().value();
            corr[(a, b)] = s / (n as f64 - 1.0);
            corr[(b, a)] = corr[(a, b)];
        }
    }
    let (values, vectors) = symmetric_eigen(&corr);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&c| values[c].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio = eigenvalues.iter().map(|v| v / total).collect();
    let loadings: Vec<Vec<f64>> = order
        .iter()
        .map(|&c| {
            let mut v = vectors.column(c);
            let lead = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let coordinates = usable
        .iter()
        .enumerate()
        .map(|(i, prof)| PoetCoordinates {
            poet_id: prof.poet_id.clone(),
            scores: loadings
                .iter()
                .map(|l| l.iter().zip(&columns).map(|(w, col)| w * col[i]).sum())
                .collect(),
        })
        .collect();
    Ok(Projection {
        metrics,
        means,
        sds,
        eigenvalues,
        explained_variance_ratio,
        loadings,
        coordinates,
        excluded_poets,
        warnings,
    })
}

/// Profiles as CSV: identity, counts, six raw means, six normalized values.
pub fn write_profiles<W: std::io::Write>(out: W, profiles: &[PoetProfile]) -> Result<()> {
    let err = |e: csv::Error| Error::Invalid(format!("writing profiles: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["poet_id".to_string(), "n_mesras".into(), "n_poems".into()];
    header.extend(MetricKind::ALL.iter().map(|m| m.name().to_string()));
    header.extend(MetricKind::ALL.iter().map(|m| format!("{}_norm", m.name())));
    w.write_record(&header).map_err(err)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in profiles {
        let mut rec = vec![p.poet_id.clone(), p.n_mesras.to_string(), p.n_poems.to_string()];
        rec.extend(p.raw.iter().map(|v| cell(*v)));
        rec.extend(p.normalized.iter().map(|v| cell(*v)));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing profiles: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricVector;

    pub(crate) fn row(poet: &str, poem: &str, line: u32, meter: &str, v: [f64; 6]) -> MetricRow {
        MetricRow {
            mesra_id: format!("{poet}/{poem}/{line}"),
            poet_id: poet.into(),
            poem_id: poem.into(),
            line_index: line,
            century: None,
            meter: meter.into(),
            form: "ghazal".into(),
            metrics: MetricVector {
                hardness: v[0],
                sonority: v[1],
                sibilance: (v[2] >= 0.0).then_some(v[2]),
                vowel_ratio: v[3],
                entropy: v[4],
                cluster_ratio: v[5],
                n_symbols: 20,
                n_tokens: 5,
            },
        }
    }

    #[test]
    fn min_max_endpoints_and_ties() {
        let rows = vec![
            row("a", "1", 0, "M01", [1.0, 3.0, 0.1, 0.4, 3.0, 0.1]),
            row("b", "1", 0, "M01", [2.0, 3.0, 0.2, 0.4, 3.1, 0.1]),
        ];
        let p = poet_profiles(&rows).unwrap();
        assert_eq!(p[0].normalized_of(MetricKind::Hardness), Some(0.0));
        assert_eq!(p[1].normalized_of(MetricKind::Hardness), Some(1.0));
        assert_eq!(p[0].normalized_of(MetricKind::Sonority), Some(0.5));
        assert!(poet_profiles(&rows[..1]).is_err());
    }

    #[test]
    fn meter_profile_weights_poems_equally() {
        let mut rows = vec![row("a", "1", 0, "M01", [1.0, 3.0, 0.1, 0.4, 3.0, 0.1])];
        for l in 0..5 {
            rows.push(row("a", "2", l, "M01", [3.0, 3.0, -1.0, 0.4, 3.0, 0.1]));
        }
        let m = meter_profiles(&rows);
        assert_eq!((m[0].n_poems, m[0].n_mesras), (2, 6));
        assert_eq!(m[0].hardness, 2.0);
        // Only poem 1 defines sibilance.
        assert_eq!(m[0].sibilance, Some(0.1));
        assert_eq!(m[0].name, "mutaqarib");
    }

    #[test]
    fn rank_one_projection() {
        let rows: Vec<_> = (0..5)
            .map(|i| row(&format!("p{i}"), "1", 0, "M01", [1.0 + i as f64, 3.0, 0.1, 0.4, 3.0, 0.1]))
            .collect();
        let proj = pca_project(&poet_profiles(&rows).unwrap()).unwrap();
        assert_eq!(proj.metrics, [MetricKind::Hardness]);
        assert!((proj.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert_eq!(proj.warnings.len(), 5);
    }
}
