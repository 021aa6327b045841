mod common;

use common::*;
use nalgebra::DMatrix;
use phonostyle::atlas::{meter_profiles, pca_project, poet_profiles, render_fingerprint, render_space, PoetProfile};
use phonostyle::linalg::{symmetric_eigen, Matrix};
use phonostyle::metrics::{MetricKind, MetricRow};
use proptest::prelude::*;
use rand::Rng;

fn profiles_from(raw: &[[f64; 6]]) -> Vec<PoetProfile> {
    raw.iter()
        .enumerate()
        .map(|(i, r)| PoetProfile {
            poet_id: format!("poet{i:03}"),
            raw: r.iter().map(|v| Some(*v)).collect(),
            normalized: vec![Some(0.5); 6],
            n_mesras: 100,
            n_poems: 10,
        })
        .collect()
}

fn random_raw(r: &mut impl Rng, n: usize) -> Vec<[f64; 6]> {
    (0..n)
        .map(|_| {
            let shared: f64 = r.gen_range(-1.0..1.0);
            let mut row = [0.0; 6];
            for (j, v) in row.iter_mut().enumerate() {
                *v = j as f64 + shared * (j as f64 * 0.3) + r.gen_range(-1.0..1.0);
            }
            row
        })
        .collect()
}

fn correlation_oracle(raw: &[[f64; 6]]) -> DMatrix<f64> {
    let n = raw.len() as f64;
    let data = DMatrix::from_fn(raw.len(), 6, |i, j| raw[i][j]);
    let mut z = data.clone();
    for j in 0..6 {
        let col = data.column(j);
        let mu = col.sum() / n;
        let sd = (col.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        for i in 0..raw.len() {
            z[(i, j)] = (data[(i, j)] - mu) / sd;
        }
    }
    z.transpose() * z / (n - 1.0)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_match_dense_solver(seed in any::<u64>(), n in 7usize..60) {
        let raw = random_raw(&mut rng(seed), n);
        let proj = pca_project(&profiles_from(&raw)).unwrap();
        let want = sorted_desc(correlation_oracle(&raw).symmetric_eigen().eigenvalues.iter().copied().collect());
        for (a, b) in proj.eigenvalues.iter().zip(&want) {
            prop_assert!((a - b.max(0.0)).abs() < 1e-10, "{a} vs {b}");
        }
        for a in 0..6 {
            for b in 0..6 {
                let dot: f64 = (0..6).map(|j| proj.loadings[a][j] * proj.loadings[b][j]).sum();
                prop_assert!((dot - (a == b) as u8 as f64).abs() < 1e-10);
            }
        }
        // All components retained: scores x loadings rebuild the z-scores.
        for (i, c) in proj.coordinates.iter().enumerate() {
            for j in 0..6 {
                let z = (raw[i][j] - proj.means[j]) / proj.sds[j];
                let back: f64 = (0..6).map(|k| c.scores[k] * proj.loadings[k][j]).sum();
                prop_assert!((z - back).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn signed_permutations_keep_eigenvalues(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = random_raw(&mut r, 30);
        let mut perm: Vec<usize> = (0..6).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let signs: Vec<f64> = (0..6).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let moved: Vec<[f64; 6]> = raw.iter().map(|row| std::array::from_fn(|j| signs[j] * row[perm[j]])).collect();
        let a = pca_project(&profiles_from(&raw)).unwrap();
        let b = pca_project(&profiles_from(&moved)).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_keeps_spectrum(seed in any::<u64>()) {
        let raw = random_raw(&mut rng(seed), 25);
        let c = correlation_oracle(&raw);
        let q = DMatrix::<f64>::from_fn(6, 6, |i, j| ((i * 7 + j * 3 + seed as usize % 11) as f64).sin()).qr().q();
        let rotated = q.transpose() * &c * &q;
        let to_m = |m: &DMatrix<f64>| Matrix::from_row_major(6, 6, (0..36).map(|k| m[(k / 6, k % 6)]).collect());
        let a = sorted_desc(symmetric_eigen(&to_m(&c)).0);
        let b = sorted_desc(symmetric_eigen(&to_m(&rotated)).0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn normalization_preserves_poet_order(seed in any::<u64>()) {
        let rows = random_rows(&mut rng(seed), 400, 9, 3, 3, 5);
        let profiles = poet_profiles(&rows).unwrap();
        for m in MetricKind::ALL {
            for a in &profiles {
                for b in &profiles {
                    let (ra, rb) = (a.raw_of(m).unwrap(), b.raw_of(m).unwrap());
                    let (na, nb) = (a.normalized_of(m).unwrap(), b.normalized_of(m).unwrap());
                    prop_assert_eq!(ra.total_cmp(&rb), na.total_cmp(&nb), "{} {} {}", m, a.poet_id, b.poet_id);
                }
            }
        }
    }
}

fn meter_mean(rows: &[MetricRow], meter: &str) -> f64 {
    meter_profiles(rows).into_iter().find(|m| m.meter == meter).unwrap().hardness
}

#[test]
fn meter_means_weight_poems_not_lines() {
    let rows = random_rows(&mut rng(31), 600, 6, 2, 2, 6);
    let base = meter_mean(&rows, "M01");

    // Repeating a whole poem inside itself leaves its mean and the meter mean alone.
    let target = rows.iter().find(|r| r.meter == "M01").unwrap().clone();
    let poem: Vec<MetricRow> = rows
        .iter()
        .filter(|r| r.poet_id == target.poet_id && r.poem_id == target.poem_id)
        .cloned()
        .collect();
    let mut doubled = rows.clone();
    for (k, r) in poem.iter().enumerate() {
        let mut c = r.clone();
        c.mesra_id.push_str("-copy");
        c.line_index = 1000 + k as u32;
        doubled.push(c);
    }
    assert!((meter_mean(&doubled, "M01") - base).abs() < 1e-12);

    // Lengthening one poem moves the meter mean by that poem's change / poems.
    let n_poems = meter_profiles(&rows).into_iter().find(|m| m.meter == "M01").unwrap().n_poems as f64;
    let old_mean = poem.iter().map(|r| r.metrics.hardness).sum::<f64>() / poem.len() as f64;
    let mut longer = rows.clone();
    let mut extra = target.clone();
    extra.mesra_id.push_str("-extra");
    extra.line_index = 2000;
    extra.metrics.hardness = 10.0;
    longer.push(extra);
    let new_mean = (old_mean * poem.len() as f64 + 10.0) / (poem.len() + 1) as f64;
    let moved = meter_mean(&longer, "M01") - base;
    assert!((moved - (new_mean - old_mean) / n_poems).abs() < 1e-12);
}

#[test]
fn rendering_is_pure() {
    let rows = random_rows(&mut rng(5), 500, 14, 3, 3, 5);
    let profiles = poet_profiles(&rows).unwrap();
    assert_eq!(render_fingerprint(&profiles, 12).unwrap(), render_fingerprint(&profiles, 12).unwrap());
    let proj = pca_project(&profiles).unwrap();
    let hl = vec!["poet03".to_string()];
    assert_eq!(render_space(&proj, &hl), render_space(&proj, &hl));
    assert_eq!(render_space(&proj, &hl).matches("class=\"label\"").count(), 1);
    assert_eq!(render_space(&proj, &[]).matches("class=\"label\"").count(), 0);
}
