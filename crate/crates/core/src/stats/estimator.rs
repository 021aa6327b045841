//! Least-squares strategies for fixed-effects designs.

use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq_qr, Matrix, RANK_TOL};
use crate::numeric::NeumaierSum;
use crate::stats::design::{Design, FactorColumn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop demeaning once every group mean is below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// `auto` switches to absorption above this many dense cells (n * k).
    pub dense_cell_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_sweeps: 500,
            dense_cell_limit: 4_000_000,
        }
    }
}

/// Coefficients in design column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub beta: Vec<f64>,
    pub estimator: &'static str,
    pub sweeps: usize,
}

pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, design: &Design, opts: &SolveOptions) -> Result<Solution>;
}

/// Householder QR on the fully materialized dummy matrix.
pub struct DenseQr;

/// Alternating projections sweep the factors out of the outcome and
/// covariates; factor effects are then backfitted from the absorbed part.
pub struct Absorb;

/// Dense QR for small designs, absorption otherwise.
pub struct Auto;

static REGISTRY: LazyLock<Vec<Box<dyn Estimator>>> =
    LazyLock::new(|| vec![Box::new(DenseQr), Box::new(Absorb), Box::new(Auto)]);

pub fn estimators() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name()).collect()
}

pub fn estimator(name: &str) -> Result<&'static dyn Estimator> {
    REGISTRY
        .iter()
        .find(|e| e.name() == name)
        .map(|e| e.as_ref())
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "estimator",
            name: name.to_string(),
            available: estimators().into_iter().map(String::from).collect(),
        })
}

impl Estimator for DenseQr {
    fn name(&self) -> &'static str {
        "dense-qr"
    }

    fn solve(&self, design: &Design, _opts: &SolveOptions) -> Result<Solution> {
        let x = design.to_dense();
        let beta =
            lstsq_qr(&x, &design.y).map_err(|j| Error::RankDeficient(vec![design.column_names[j].clone()]))?;
        Ok(Solution {
            beta,
            estimator: self.name(),
            sweeps: 0,
        })
    }
}

impl Estimator for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(&self, design: &Design, opts: &SolveOptions) -> Result<Solution> {
        if design.n_obs().saturating_mul(design.n_params()) <= opts.dense_cell_limit || design.factors.is_empty() {
            DenseQr.solve(design, opts)
        } else {
            Absorb.solve(design, opts)
        }
    }
}

/// One pass of subtracting each factor's group means from `col`, adding
/// them to `effects`. Returns the largest mean removed.
fn sweep(col: &mut [f64], effects: &mut [Vec<f64>], factors: &[FactorColumn]) -> f64 {
    let mut largest = 0.0f64;
    for (fc, eff) in factors.iter().zip(effects.iter_mut()) {
        let means = group_means(col, fc);
        for (x, &c) in col.iter_mut().zip(&fc.codes) {
            *x -= means[c as usize];
        }
        for (e, m) in eff.iter_mut().zip(&means) {
            *e += m;
            largest = largest.max(m.abs());
        }
    }
    largest
}

/// Alternating projections with Irons-Tuck acceleration every second sweep.
///
/// `col` ends as the residual from all factors and `effects` as the removed
/// per-level components. Returns the sweeps used and the largest mean of the
/// last sweep, which is below `tol` on convergence.
fn alternating_projections(
    col: &mut Vec<f64>,
    effects: &mut [Vec<f64>],
    factors: &[FactorColumn],
    tol: f64,
    max_sweeps: usize,
) -> (usize, f64) {
    let mut sweeps = 0;
    let mut last = f64::INFINITY;
    while sweeps < max_sweeps {
        let x0 = (col.clone(), effects.to_vec());
        last = sweep(col, effects, factors);
        sweeps += 1;
        if last < tol || sweeps == max_sweeps {
            break;
        }
        let g1 = (col.clone(), effects.to_vec());
        last = sweep(col, effects, factors);
        sweeps += 1;
        if last < tol {
            break;
        }
        // x <- G2 - a (G2 - G1), a = <G2-G1, G2-2G1+X> / |G2-2G1+X|^2, over the whole state.
        let mut num = NeumaierSum::new();
        let mut den = NeumaierSum::new();
        let pairs = |v: &Vec<f64>, e: &[Vec<f64>]| v.iter().chain(e.iter().flatten()).copied().collect::<Vec<f64>>();
        let (x, a, b) = (pairs(&x0.0, &x0.1), pairs(&g1.0, &g1.1), pairs(col, effects));
        for i in 0..x.len() {
            let d1 = b[i] - a[i];
            let d2 = b[i] - 2.0 * a[i] + x[i];
            num.add(d1 * d2);
            den.add(d2 * d2);
        }
        let den = den.value();
        if den > 0.0 && den.is_finite() {
            let coef = num.value() / den;
            for (v, g) in col.iter_mut().zip(&g1.0) {
                *v -= coef * (*v - g);
            }
            for (e, g) in effects.iter_mut().zip(&g1.1) {
                for (v, gv) in e.iter_mut().zip(g) {
                    *v -= coef * (*v - gv);
                }
            }
        }
    }
    (sweeps, last)
}

/// Remove every factor from `col`. Returns the sweeps used, or the largest
/// remaining mean on failure.
fn demean_in_place(col: &mut Vec<f64>, factors: &[FactorColumn], tol: f64, max_sweeps: usize) -> Result<usize, f64> {
    if factors.is_empty() {
        let m = col.iter().copied().collect::<NeumaierSum>().value() / col.len() as f64;
        col.iter_mut().for_each(|x| *x -= m);
        return Ok(1);
    }
    let mut effects: Vec<Vec<f64>> = factors.iter().map(|fc| vec![0.0; fc.levels.len()]).collect();
    match alternating_projections(col, &mut effects, factors, tol, max_sweeps) {
        (s, last) if last < tol => Ok(s),
        (_, last) => Err(last),
    }
}

fn group_means(col: &[f64], fc: &FactorColumn) -> Vec<f64> {
    let mut sums = vec![NeumaierSum::new(); fc.levels.len()];
    let mut counts = vec![0usize; fc.levels.len()];
    for (&x, &c) in col.iter().zip(&fc.codes) {
        sums[c as usize].add(x);
        counts[c as usize] += 1;
    }
    sums.iter().zip(&counts).map(|(s, &n)| if n == 0 { 0.0 } else { s.value() / n as f64 }).collect()
}

fn norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).collect::<NeumaierSum>().value().sqrt()
}

impl Estimator for Absorb {
    fn name(&self) -> &'static str {
        "absorb"
    }

    fn solve(&self, design: &Design, opts: &SolveOptions) -> Result<Solution> {
        let n = design.n_obs();
        let p = design.covariates.len();
        let mut columns: Vec<Vec<f64>> = std::iter::once(design.y.clone())
            .chain(design.covariates.iter().map(|(_, c)| c.clone()))
            .collect();
        let outcomes: Vec<Result<usize, f64>> = columns
            .par_iter_mut()
            .map(|c| demean_in_place(c, &design.factors, opts.tol, opts.max_sweeps))
            .collect();
        let mut sweeps = 0;
        for (j, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(s) => sweeps = sweeps.max(s),
                Err(residual) => {
                    let column = if j == 0 { "outcome".to_string() } else { design.covariates[j - 1].0.name().to_string() };
                    return Err(Error::NonConvergence {
                        sweeps: opts.max_sweeps,
                        residual,
                        column,
                    });
                }
            }
        }

        let y_tilde = &columns[0];
        let c_tilde = &columns[1..];
        let mut dependent = Vec::new();
        for (j, ct) in c_tilde.iter().enumerate() {
            let original = norm(&design.covariates[j].1);
            if original == 0.0 || norm(ct) <= RANK_TOL * original {
                dependent.push(design.covariates[j].0.name().to_string());
            }
        }
        if !dependent.is_empty() {
            return Err(Error::RankDeficient(dependent));
        }
        let slopes = if p == 0 {
            Vec::new()
        } else {
            let mut data = Vec::with_capacity(n * p);
            for i in 0..n {
                data.extend(c_tilde.iter().map(|c| c[i]));
            }
            lstsq_qr(&Matrix::from_row_major(n, p, data), y_tilde)
                .map_err(|j| Error::RankDeficient(vec![design.covariates[j].0.name().to_string()]))?
        };

        // The part of y explained by the factors (and intercept) alone.
        let mut absorbed: Vec<f64> = (0..n)
            .map(|i| {
                let mut raw = design.y[i];
                let mut tilde = y_tilde[i];
                for (j, b) in slopes.iter().enumerate() {
                    raw -= b * design.covariates[j].1[i];
                    tilde -= b * c_tilde[j][i];
                }
                raw - tilde
            })
            .collect();

        let mut beta = vec![0.0; design.n_params()];
        if design.factors.is_empty() {
            beta[0] = absorbed.iter().copied().collect::<NeumaierSum>().value() / n as f64;
        } else {
            let mut effects: Vec<Vec<f64>> = design.factors.iter().map(|fc| vec![0.0; fc.levels.len()]).collect();
            let (_, change) =
                alternating_projections(&mut absorbed, &mut effects, &design.factors, opts.tol * 1e-2, opts.max_sweeps);
            if change >= opts.tol {
                return Err(Error::NonConvergence {
                    sweeps: opts.max_sweeps,
                    residual: change,
                    column: "fixed-effect recovery".into(),
                });
            }
            for (f, (fc, eff)) in design.factors.iter().zip(&effects).enumerate() {
                beta[0] += eff[0];
                let off = design.factor_offset(f);
                for l in 1..fc.levels.len() {
                    beta[off + l - 1] = eff[l] - eff[0];
                }
            }
        }
        beta[design.covariate_offset()..].copy_from_slice(&slopes);
        Ok(Solution {
            beta,
            estimator: self.name(),
            sweeps,
        })
    }
}
