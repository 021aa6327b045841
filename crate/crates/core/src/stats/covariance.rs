//! CR1 cluster-robust sandwich covariance over the full model matrix.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, Matrix};
use crate::numeric::REDUCE_CHUNK;
use crate::stats::design::Design;

#[derive(Debug, Clone)]
pub struct ClusterCovariance {
    pub covariance: Matrix,
    pub se: Vec<f64>,
    pub n_clusters: usize,
    /// Small-sample factor G/(G-1) * (N-1)/(N-K).
    pub correction: f64,
    pub flagged: Vec<String>,
}

fn add_outer(acc: &mut [f64], k: usize, entries: &[(usize, f64)]) {
    for &(a, va) in entries {
        let row = &mut acc[a * k..(a + 1) * k];
        for &(b, vb) in entries {
            row[b] += va * vb;
        }
    }
}

fn merge(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// X'X accumulated sparsely in fixed row chunks, merged in chunk order.
pub fn cross_product(design: &Design) -> Matrix {
    let k = design.n_params();
    let n = design.n_obs();
    let starts: Vec<usize> = (0..n).step_by(REDUCE_CHUNK).collect();
    let partials: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut acc = vec![0.0; k * k];
            let mut entries = Vec::with_capacity(8);
            for i in s..(s + REDUCE_CHUNK).min(n) {
                entries.clear();
                design.for_each_entry(i, |c, v| entries.push((c, v)));
                add_outer(&mut acc, k, &entries);
            }
            acc
        })
        .collect();
    let data = partials.into_iter().fold(vec![0.0; k * k], merge);
    Matrix::from_row_major(k, k, data)
}

struct MeatPart {
    meat: Vec<f64>,
    varies: Vec<bool>,
    nonzero_clusters: Vec<usize>,
}

/// Poem-clustered CR1 covariance for the coefficients of `design` given
/// its residuals.
pub fn cluster_robust(design: &Design, residuals: &[f64]) -> Result<ClusterCovariance> {
    let n = design.n_obs();
    let k = design.n_params();
    let g = design.n_clusters();
    if g < 2 {
        return Err(Error::Invalid(format!("clustered errors need at least 2 clusters, found {g}")));
    }
    if n <= k {
        return Err(Error::Invalid(format!("{n} observations for {k} parameters")));
    }
    let bread = spd_inverse(&cross_product(design))
        .map_err(|j| Error::RankDeficient(vec![design.column_names[j].clone()]))?;

    // Row indices grouped by cluster (counting sort keeps row order within a cluster).
    let mut starts = vec![0usize; g + 1];
    for &c in &design.clusters {
        starts[c as usize + 1] += 1;
    }
    for c in 0..g {
        starts[c + 1] += starts[c];
    }
    let mut order = vec![0usize; n];
    let mut fill = starts.clone();
    for (i, &c) in design.clusters.iter().enumerate() {
        order[fill[c as usize]] = i;
        fill[c as usize] += 1;
    }

    let chunk = 2048;
    let cluster_chunks: Vec<usize> = (0..g).step_by(chunk).collect();
    let parts: Vec<MeatPart> = cluster_chunks
        .par_iter()
        .map(|&c0| {
            let mut part = MeatPart {
                meat: vec![0.0; k * k],
                varies: vec![false; k],
                nonzero_clusters: vec![0; k],
            };
            let mut score = vec![0.0; k];
            let mut count = vec![0usize; k];
            let mut first = vec![0.0; k];
            let mut touched: Vec<usize> = Vec::new();
            let mut entries = Vec::new();
            for c in c0..(c0 + chunk).min(g) {
                let rows = &order[starts[c]..starts[c + 1]];
                for &i in rows {
                    let e = residuals[i];
                    design.for_each_entry(i, |j, v| {
                        if count[j] == 0 {
                            touched.push(j);
                            first[j] = v;
                        } else if v != first[j] {
                            part.varies[j] = true;
                        }
                        count[j] += 1;
                        score[j] += v * e;
                    });
                }
                entries.clear();
                for &j in &touched {
                    if count[j] != rows.len() {
                        // Zero in some rows, non-zero in others.
                        part.varies[j] = true;
                    }
                    if first[j] != 0.0 {
                        part.nonzero_clusters[j] += 1;
                    }
                    entries.push((j, score[j]));
                    score[j] = 0.0;
                    count[j] = 0;
                }
                touched.clear();
                add_outer(&mut part.meat, k, &entries);
            }
            part
        })
        .collect();

    let mut meat = vec![0.0; k * k];
    let mut varies = vec![false; k];
    let mut nonzero_clusters = vec![0usize; k];
    for p in parts {
        meat = merge(meat, p.meat);
        for j in 0..k {
            varies[j] |= p.varies[j];
            nonzero_clusters[j] += p.nonzero_clusters[j];
        }
    }
    let meat = Matrix::from_row_major(k, k, meat);
    let correction = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64));
    let mut covariance = bread.matmul(&meat).matmul(&bread);
    for i in 0..k {
        for j in 0..k {
            covariance[(i, j)] *= correction;
        }
    }
    let se = (0..k).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    let flagged = (1..k)
        .filter(|&j| !varies[j] && nonzero_clusters[j] <= 1)
        .map(|j| design.column_names[j].clone())
        .collect();
    Ok(ClusterCovariance {
        covariance,
        se,
        n_clusters: g,
        correction,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricKind, MetricRow, MetricVector};
    use crate::stats::{build_design, Covariate, Factor, ModelSpec};

    fn rows() -> Vec<MetricRow> {
        let mut out = Vec::new();
        for i in 0..90usize {
            // Poet "z" contributes a single poem.
            let (poet, poem) = if i >= 84 { ("z", 0) } else { (["a", "b"][i % 2], i / 6) };
            let nsym = 18 + (i * 11) % 9;
            out.push(MetricRow {
                mesra_id: format!("{poet}/{poem}/{i}"),
                poet_id: poet.into(),
                poem_id: poem.to_string(),
                line_index: i as u32,
                century: None,
                meter: "M01".into(),
                form: "ghazal".into(),
                metrics: MetricVector {
                    hardness: 2.0 + ((i * 37) % 11) as f64 * 0.1,
                    sonority: 3.0,
                    sibilance: None,
                    vowel_ratio: 0.4,
                    cluster_ratio: 0.1,
                    entropy: 3.0,
                    n_symbols: nsym,
                    n_tokens: 5,
                },
            });
        }
        out
    }

    /// Naive dense sandwich with explicit cluster sums.
    fn dense_sandwich(x: &Matrix, e: &[f64], clusters: &[u32], g: usize) -> Matrix {
        let (n, k) = (x.rows(), x.cols());
        let bread = spd_inverse(&x.transpose().matmul(x)).unwrap();
        let mut scores = Matrix::zeros(g, k);
        for i in 0..n {
            for j in 0..k {
                scores[(clusters[i] as usize, j)] += x[(i, j)] * e[i];
            }
        }
        let meat = scores.transpose().matmul(&scores);
        let c = (g as f64 / (g as f64 - 1.0)) * ((n as f64 - 1.0) / (n as f64 - k as f64));
        let v = bread.matmul(&meat).matmul(&bread);
        Matrix::from_row_major(k, k, v.as_slice().iter().map(|x| x * c).collect())
    }

    #[test]
    fn matches_dense_sandwich_and_flags_singleton() {
        let spec = ModelSpec::new(MetricKind::Hardness, vec![Factor::Poet], vec![Covariate::NSymbols]);
        let d = build_design(&rows(), &spec, false).unwrap();
        let e: Vec<f64> = (0..d.n_obs()).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let got = cluster_robust(&d, &e).unwrap();
        let want = dense_sandwich(&d.to_dense(), &e, &d.clusters, d.n_clusters());
        for (a, b) in got.covariance.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
        assert_eq!(got.flagged, ["poet:z"]);
    }

    #[test]
    fn one_cluster_is_invalid() {
        let mut rs = rows();
        for r in &mut rs {
            r.poem_id = "0".into();
            r.poet_id = if r.line_index % 2 == 0 { "a".into() } else { "b".into() };
        }
        let spec = ModelSpec::new(MetricKind::Hardness, vec![], vec![Covariate::NSymbols]);
        let d = build_design(&rs, &spec, false).unwrap();
        // Two poets still give two clusters; collapse to one poet.
        assert_eq!(d.n_clusters(), 2);
        for r in &mut rs {
            r.poet_id = "a".into();
        }
        let d = build_design(&rs, &spec, false).unwrap();
        assert!(cluster_robust(&d, &vec![0.0; d.n_obs()]).is_err());
    }
}
