//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use phonostyle::linalg::Matrix;
use phonostyle::metrics::{MetricRow, MetricVector};
use phonostyle::phonology::{FeatureTable, PhonemeFeature};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A prephonemized token: a table symbol or a word boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Sym(String),
    Boundary,
}

pub fn symbols(table: &FeatureTable) -> Vec<String> {
    table.entries().iter().map(|e| e.symbol.clone()).collect()
}

/// `len` symbols drawn from `pool`, with boundaries sprinkled in when asked
/// (including leading, trailing and repeated ones).
pub fn random_tokens(r: &mut impl Rng, pool: &[String], len: usize, boundaries: bool) -> Vec<Tok> {
    let mut out = Vec::new();
    for _ in 0..len {
        if boundaries && r.gen_bool(0.2) {
            out.push(Tok::Boundary);
        }
        out.push(Tok::Sym(pool[r.gen_range(0..pool.len())].clone()));
    }
    if boundaries && r.gen_bool(0.2) {
        out.push(Tok::Boundary);
    }
    out
}

pub fn render(tokens: &[Tok], boundary: &str) -> String {
    tokens
        .iter()
        .map(|t| match t {
            Tok::Sym(s) => s.as_str(),
            Tok::Boundary => boundary,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Words as lists of symbols, empty words removed.
pub fn words(tokens: &[Tok]) -> Vec<Vec<&str>> {
    let mut out = vec![Vec::new()];
    for t in tokens {
        match t {
            Tok::Sym(s) => out.last_mut().unwrap().push(s.as_str()),
            Tok::Boundary => out.push(Vec::new()),
        }
    }
    out.retain(|w| !w.is_empty());
    out
}

/// The six metrics recomputed from first principles with plain loops.
pub fn oracle_metrics(tokens: &[Tok], table: &FeatureTable) -> MetricVector {
    let by_symbol: HashMap<&str, &PhonemeFeature> = table.entries().iter().map(|e| (e.symbol.as_str(), e)).collect();
    let ws = words(tokens);
    let syms: Vec<&PhonemeFeature> = ws.iter().flatten().map(|s| by_symbol[s]).collect();
    let n = syms.len() as f64;

    let mut hard = 0.0;
    let mut son = 0.0;
    for f in &syms {
        hard += f.hardness;
        son += f.sonority;
    }
    let consonants: Vec<&&PhonemeFeature> = syms.iter().filter(|f| f.segment_class.is_consonant()).collect();
    let strident = consonants.iter().filter(|f| f.strident).count();
    let vowels = syms.iter().filter(|f| f.is_vowel()).count();

    let mut clustered = 0usize;
    for w in &ws {
        for i in 0..w.len() {
            if !by_symbol[w[i]].is_consonant() {
                continue;
            }
            // Quadratic scan over the word for a consonant exactly one step away.
            let neighbour = (0..w.len()).any(|j| j.abs_diff(i) == 1 && by_symbol[w[j]].is_consonant());
            if neighbour {
                clustered += 1;
            }
        }
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in ws.iter().flatten() {
        *counts.entry(s).or_default() += 1;
    }
    let mut h = 0.0;
    for c in counts.values() {
        let p = *c as f64 / n;
        h -= p * p.log2();
    }

    MetricVector {
        hardness: hard / n,
        sonority: son / n,
        sibilance: (!consonants.is_empty()).then(|| strident as f64 / consonants.len() as f64),
        vowel_ratio: vowels as f64 / n,
        cluster_ratio: clustered as f64 / n,
        entropy: h,
        n_symbols: syms.len(),
        n_tokens: ws.len(),
    }
}

pub fn max_metric_diff(a: &MetricVector, b: &MetricVector) -> f64 {
    let sib = match (a.sibilance, b.sibilance) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    [
        (a.hardness - b.hardness).abs(),
        (a.sonority - b.sonority).abs(),
        sib,
        (a.vowel_ratio - b.vowel_ratio).abs(),
        (a.cluster_ratio - b.cluster_ratio).abs(),
        (a.entropy - b.entropy).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// OLS via nalgebra's SVD.
pub fn ols_oracle(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let xm = to_dmatrix(x);
    let yv = DVector::from_column_slice(y);
    let svd = xm.svd(true, true);
    svd.solve(&yv, 1e-14).unwrap().iter().copied().collect()
}

/// CR1 sandwich with dense matrices: (X'X)^-1 (sum_g X_g' e_g e_g' X_g) (X'X)^-1 * G/(G-1) * (n-1)/(n-k).
pub fn cr1_oracle(x: &Matrix, resid: &[f64], clusters: &[u32]) -> DMatrix<f64> {
    let xm = to_dmatrix(x);
    let (n, k) = xm.shape();
    let bread = (xm.transpose() * &xm).try_inverse().expect("invertible X'X");
    let mut groups: HashMap<u32, DVector<f64>> = HashMap::new();
    for i in 0..n {
        let score = xm.row(i).transpose() * resid[i];
        groups
            .entry(clusters[i])
            .and_modify(|s| *s += &score)
            .or_insert(score);
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in groups.values() {
        meat += s * s.transpose();
    }
    let g = groups.len() as f64;
    let c = g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
    &bread * meat * &bread * c
}

/// HC1: (X'X)^-1 X' diag(e^2) X (X'X)^-1 * n/(n-k).
pub fn hc1_oracle(x: &Matrix, resid: &[f64]) -> DMatrix<f64> {
    let xm = to_dmatrix(x);
    let (n, k) = xm.shape();
    let bread = (xm.transpose() * &xm).try_inverse().expect("invertible X'X");
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let r = xm.row(i);
        meat += r.transpose() * r * (resid[i] * resid[i]);
    }
    &bread * meat * &bread * (n as f64 / (n as f64 - k as f64))
}

/// Random metric rows over `poets` x `meters` x `forms` with an arbitrary
/// outcome signal in hardness, poems of `lines` rows each.
pub fn random_rows(r: &mut impl Rng, n: usize, poets: usize, meters: usize, forms: usize, lines: usize) -> Vec<MetricRow> {
    let pe: Vec<f64> = (0..poets).map(|_| r.gen_range(-1.0..1.0)).collect();
    let me: Vec<f64> = (0..meters).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(n);
    let mut poem = 0usize;
    let mut poem_ctx = (0, 0, 0);
    for i in 0..n {
        if i % lines == 0 {
            poem += 1;
            poem_ctx = (r.gen_range(0..poets), r.gen_range(0..meters), r.gen_range(0..forms));
        }
        // Cycle the first rows through every poet and meter so all levels appear.
        let (p, m, f) = if i < poets.max(meters) * 2 {
            (i % poets, i % meters, i % forms)
        } else {
            poem_ctx
        };
        let n_symbols = r.gen_range(8..60);
        let n_tokens = r.gen_range(2..10);
        let y = 1.5 + pe[p] + me[m] + 0.01 * n_symbols as f64 + r.gen_range(-0.5..0.5);
        out.push(MetricRow {
            mesra_id: format!("r{i}"),
            poet_id: format!("poet{p:02}"),
            poem_id: format!("q{poem:05}"),
            line_index: (i % lines) as u32,
            century: Some(5 + (p % 4) as i32),
            meter: format!("M{:02}", m + 1),
            form: ["ghazal", "masnavi", "qasida"][f].to_string(),
            metrics: MetricVector {
                hardness: y,
                sonority: 3.0 + 0.3 * y + r.gen_range(-0.2..0.2),
                sibilance: Some(r.gen_range(0.0..0.4)),
                vowel_ratio: r.gen_range(0.3..0.6),
                cluster_ratio: r.gen_range(0.0..0.3),
                entropy: r.gen_range(2.5..4.0),
                n_symbols,
                n_tokens,
            },
        });
    }
    out
}
