//! Poem-level bootstrap of century means.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricKind, MetricRow};
use crate::numeric::{quantile_sorted, NeumaierSum};

pub const MIN_REPLICATES: usize = 100;
pub const MIN_POEMS_PER_CENTURY: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCell {
    pub century: i32,
    pub metric: MetricKind,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_poems: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTrend {
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
    pub cells: Vec<TrendCell>,
    /// Centuries with too few poems, with their poem counts.
    pub excluded_centuries: BTreeMap<i32, usize>,
}

impl BootstrapTrend {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::Invalid(format!("writing trend table: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["century", "metric", "mean", "ci_low", "ci_high", "n_poems"]).map_err(err)?;
        for c in &self.cells {
            w.write_record([
                c.century.to_string(),
                c.metric.name().to_string(),
                c.mean.to_string(),
                c.ci_low.to_string(),
                c.ci_high.to_string(),
                c.n_poems.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("writing trend table: {e}")))
    }
}

/// Per-poem metric means, `None` where a metric is undefined on every line.
type PoemMeans = Vec<Option<f64>>;

fn poem_means(rows: &[MetricRow], metrics: &[MetricKind]) -> BTreeMap<i32, Vec<PoemMeans>> {
    let mut poems: BTreeMap<(i32, String), Vec<(NeumaierSum, usize)>> = BTreeMap::new();
    for r in rows {
        let Some(c) = r.century else { continue };
        let acc = poems
            .entry((c, r.poem_key()))
            .or_insert_with(|| vec![(NeumaierSum::new(), 0); metrics.len()]);
        for (slot, m) in acc.iter_mut().zip(metrics) {
            if let Some(v) = r.metrics.get(*m) {
                slot.0.add(v);
                slot.1 += 1;
            }
        }
    }
    let mut out: BTreeMap<i32, Vec<PoemMeans>> = BTreeMap::new();
    for ((c, _), acc) in poems {
        let means = acc.iter().map(|(s, n)| (*n > 0).then(|| s.value() / *n as f64)).collect();
        out.entry(c).or_default().push(means);
    }
    out
}

fn mean_over<'a>(poems: impl Iterator<Item = &'a PoemMeans>, j: usize) -> Option<f64> {
    let mut s = NeumaierSum::new();
    let mut n = 0usize;
    for p in poems {
        if let Some(v) = p[j] {
            s.add(v);
            n += 1;
        }
    }
    (n > 0).then(|| s.value() / n as f64)
}

/// Resample poems with replacement within each century and report
/// percentile intervals of the century mean of poem means.
///
/// Replicate `b` draws from its own ChaCha stream seeded with `seed ^ b`, so
/// results do not depend on thread count.
pub fn bootstrap_century(
    rows: &[MetricRow],
    metrics: &[MetricKind],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapTrend> {
    if replicates < MIN_REPLICATES {
        return Err(Error::Config(format!("bootstrap needs at least {MIN_REPLICATES} replicates, got {replicates}")));
    }
    if metrics.is_empty() {
        return Err(Error::Config("no metrics requested".into()));
    }
    let by_century = poem_means(rows, metrics);
    let mut excluded = BTreeMap::new();
    let kept: Vec<(i32, Vec<PoemMeans>)> = by_century
        .into_iter()
        .filter_map(|(c, p)| {
            if p.len() < MIN_POEMS_PER_CENTURY {
                excluded.insert(c, p.len());
                None
            } else {
                Some((c, p))
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::Invalid(format!(
            "no century has {MIN_POEMS_PER_CENTURY} or more poems with a known century"
        )));
    }

    // draws[b][cell] for cell = century_index * metrics + metric_index.
    let draws: Vec<Vec<Option<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ b as u64);
            let mut out = Vec::with_capacity(kept.len() * metrics.len());
            let mut sample = Vec::new();
            for (_, poems) in &kept {
                sample.clear();
                sample.extend((0..poems.len()).map(|_| &poems[rng.gen_range(0..poems.len())]));
                for j in 0..metrics.len() {
                    out.push(mean_over(sample.iter().copied(), j));
                }
            }
            out
        })
        .collect();

    let level = 0.95;
    let mut cells = Vec::new();
    for (ci, (century, poems)) in kept.iter().enumerate() {
        for (j, &metric) in metrics.iter().enumerate() {
            let Some(point) = mean_over(poems.iter(), j) else { continue };
            let idx = ci * metrics.len() + j;
            let mut reps: Vec<f64> = draws.iter().filter_map(|d| d[idx]).collect();
            reps.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&reps, (1.0 - level) / 2.0);
            let hi = quantile_sorted(&reps, 1.0 - (1.0 - level) / 2.0);
            cells.push(TrendCell {
                century: *century,
                metric,
                mean: point,
                ci_low: lo.min(point),
                ci_high: hi.max(point),
                n_poems: poems.iter().filter(|p| p[j].is_some()).count(),
            });
        }
    }
    Ok(BootstrapTrend {
        replicates,
        seed,
        level,
        cells,
        excluded_centuries: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricVector;

    fn rows(centuries: &[(i32, usize)]) -> Vec<MetricRow> {
        let mut out = Vec::new();
        for &(c, poems) in centuries {
            for p in 0..poems {
                for l in 0..3 {
                    out.push(MetricRow {
                        mesra_id: format!("x{c}/{p}/{l}"),
                        poet_id: format!("x{c}"),
                        poem_id: p.to_string(),
                        line_index: l,
                        century: Some(c),
                        meter: "M01".into(),
                        form: "ghazal".into(),
                        metrics: MetricVector {
                            hardness: 2.0 + ((p * 37 + l as usize * 11) % 23) as f64 * 0.017,
                            sonority: 3.0,
                            sibilance: None,
                            vowel_ratio: 0.4,
                            cluster_ratio: 0.1,
                            entropy: 3.0,
                            n_symbols: 20,
                            n_tokens: 5,
                        },
                    });
                }
            }
        }
        out
    }

    #[test]
    fn deterministic_and_brackets_mean() {
        let rs = rows(&[(5, 20), (6, 12), (7, 3)]);
        let m = [MetricKind::Hardness, MetricKind::Sibilance];
        let a = bootstrap_century(&rs, &m, 200, 7).unwrap();
        let b = bootstrap_century(&rs, &m, 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.excluded_centuries.get(&7), Some(&3));
        // Sibilance is undefined everywhere, so only hardness cells remain.
        assert_eq!(a.cells.len(), 2);
        for c in &a.cells {
            assert!(c.ci_low <= c.mean && c.mean <= c.ci_high);
        }
        let other = bootstrap_century(&rs, &m, 200, 8).unwrap();
        assert_ne!(a.cells, other.cells);
    }

    #[test]
    fn too_few_replicates() {
        assert!(matches!(
            bootstrap_century(&rows(&[(5, 10)]), &[MetricKind::Hardness], 99, 0),
            Err(Error::Config(_))
        ));
    }
}
