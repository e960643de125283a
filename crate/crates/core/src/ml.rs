//! Depth prediction from symmetry features: standardization, an RBF kernel
//! ridge regressor and an ordinal ensemble of cutoff classifiers.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GAMMA_GRID: [f64; 7] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];
pub const LAMBDA_GRID: [f64; 6] = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0];
pub const DEFAULT_CUTOFFS: std::ops::RangeInclusive<u32> = 3..=15;
pub const CLASSIFIER_ITERATIONS: usize = 2000;
pub const CLASSIFIER_STEP: f64 = 0.1;
pub const CV_FOLDS: usize = 5;

const MODEL_HEADER: &str = "qaoasym-model 1";

/// Per-column affine map to zero mean and unit population std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero variance; their std is set to 1.
    pub constant_columns: Vec<usize>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "standardizer needs at least 2 rows, got {}",
                x.len()
            )));
        }
        let d = x[0].len();
        check_dims(x, d)?;
        let m = x.len() as f64;
        let mut means = vec![0.0; d];
        let mut stds = vec![0.0; d];
        let mut constant_columns = Vec::new();
        for j in 0..d {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / m;
            let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m;
            means[j] = mean;
            // Relative threshold so that shifted constant columns still count.
            if var.sqrt() <= 1e-12 * mean.abs().max(1.0) {
                log::warn!("feature column {j} is constant; leaving it unscaled");
                constant_columns.push(j);
                stds[j] = 1.0;
            } else {
                stds[j] = var.sqrt();
            }
        }
        Ok(Standardizer {
            means,
            stds,
            constant_columns,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if self.constant_columns.contains(&j) {
                    0.0
                } else {
                    (v - self.means[j]) / self.stds[j]
                }
            })
            .collect())
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}

fn check_dims(x: &[Vec<f64>], d: usize) -> Result<()> {
    match x.iter().find(|r| r.len() != d) {
        Some(r) => Err(Error::DimensionMismatch {
            expected: d,
            got: r.len(),
        }),
        None => Ok(()),
    }
}

/// `exp(-γ ‖x − y‖²)`.
pub fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

fn gram(x: &[Vec<f64>], gamma: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = rbf(&x[i], &x[j], gamma);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn sub_gram(k: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| k[(rows[i], cols[j])])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            gamma: 0.1,
            lambda: 0.1,
        }
    }
}

/// Kernel expansion `bias + Σ w_i k(x, x_i)` over standardized support points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub gamma: f64,
    pub lambda: f64,
    pub bias: f64,
}

impl KernelModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| w * rbf(x, s, self.gamma))
                .sum::<f64>()
    }
}

fn validate_xy(x: &[Vec<f64>], y: &[f64], min_rows: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < min_rows {
        return Err(Error::EmptyInput(format!(
            "need at least {min_rows} training rows, got {}",
            x.len()
        )));
    }
    check_dims(x, x[0].len())
}

fn check_hyper(hp: Hyper) -> Result<()> {
    if !hp.gamma.is_finite() || !hp.lambda.is_finite() || hp.gamma <= 0.0 || hp.lambda < 0.0 {
        return Err(Error::InvalidParams(format!(
            "need γ > 0 and λ ≥ 0, got γ = {}, λ = {}",
            hp.gamma, hp.lambda
        )));
    }
    Ok(())
}

fn ridge_weights(k: DMatrix<f64>, y: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let rhs = DVector::from_iterator(n, y.iter().map(|v| v - mean));
    let a = k + DMatrix::identity(n, n) * lambda;
    let w = match a.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => a.lu().solve(&rhs).ok_or(Error::SingularSystem)?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok((w.iter().copied().collect(), mean))
}

/// Kernel ridge regression: `w = (K + λI)^{-1} (y − ȳ)`, bias `ȳ`.
/// `x` is expected to be standardized already.
pub fn train_regressor(x: &[Vec<f64>], y: &[f64], hp: Hyper) -> Result<KernelModel> {
    validate_xy(x, y, 1)?;
    check_hyper(hp)?;
    if hp.lambda == 0.0 {
        for i in 0..x.len() {
            if x[..i].contains(&x[i]) {
                return Err(Error::SingularSystem);
            }
        }
    }
    let (weights, bias) = ridge_weights(gram(x, hp.gamma), y, hp.lambda)?;
    Ok(KernelModel {
        support: x.to_vec(),
        weights,
        gamma: hp.gamma,
        lambda: hp.lambda,
        bias,
    })
}

pub fn predict_regressor(model: &KernelModel, x: &[f64]) -> f64 {
    model.predict(x)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Regularized kernel logistic regression by functional gradient descent.
/// `t` holds ±1 labels. Returns dual weights and bias.
fn fit_logistic(k: &DMatrix<f64>, t: &[f64], lambda: f64) -> (DVector<f64>, f64) {
    let n = t.len();
    let eta = CLASSIFIER_STEP;
    let shrink = 1.0 - eta * lambda;
    let mut alpha = DVector::zeros(n);
    let mut bias = 0.0;
    let mut f = DVector::zeros(n);
    let mut g = DVector::zeros(n);
    for _ in 0..CLASSIFIER_ITERATIONS {
        k.mul_to(&alpha, &mut f);
        for i in 0..n {
            let m = t[i] * (f[i] + bias);
            g[i] = -t[i] * sigmoid(-m);
        }
        alpha *= shrink;
        alpha.axpy(-eta / n as f64, &g, 1.0);
        bias -= eta * g.mean();
    }
    (alpha, bias)
}

pub fn train_classifier(x: &[Vec<f64>], labels: &[f64], hp: Hyper) -> Result<KernelModel> {
    validate_xy(x, labels, 2)?;
    check_hyper(hp)?;
    if labels.iter().any(|&t| t != 1.0 && t != -1.0) {
        return Err(Error::InvalidParams("classifier labels must be ±1".into()));
    }
    let (alpha, bias) = fit_logistic(&gram(x, hp.gamma), labels, hp.lambda);
    Ok(KernelModel {
        support: x.to_vec(),
        weights: alpha.iter().copied().collect(),
        gamma: hp.gamma,
        lambda: hp.lambda,
        bias,
    })
}

/// One binary classifier per cutoff `c`, answering "is p_min < c?".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalEnsemble {
    pub cutoffs: Vec<u32>,
    pub classifiers: Vec<KernelModel>,
    /// Population std of each classifier's training scores.
    pub sigmas: Vec<f64>,
    pub y_min: f64,
    /// Largest training label, with values above the top cutoff collapsed onto it.
    pub y_max: f64,
}

fn cutoff_labels(y: &[f64], c: u32) -> Vec<f64> {
    y.iter()
        .map(|&v| if v < c as f64 { 1.0 } else { -1.0 })
        .collect()
}

fn population_std(v: &[f64]) -> f64 {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    (v.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / m).sqrt()
}

/// Trains the ensemble from a precomputed Gram matrix over the rows of `x`.
fn ordinal_from_gram(
    k: &DMatrix<f64>,
    x: &[Vec<f64>],
    y: &[f64],
    cutoffs: &[u32],
    hp: Hyper,
) -> Result<(OrdinalEnsemble, Vec<u32>)> {
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "cutoffs must be strictly increasing".into(),
        ));
    }
    let (kept, dropped): (Vec<u32>, Vec<u32>) = cutoffs.iter().partition(|&&c| {
        let t = cutoff_labels(y, c);
        t.contains(&1.0) && t.contains(&-1.0)
    });
    for c in &dropped {
        log::warn!("cutoff {c} does not split the training labels; dropped");
    }
    if kept.is_empty() {
        return Err(Error::DegenerateLabels(
            "no cutoff splits the training labels".into(),
        ));
    }
    let fitted: Vec<(KernelModel, f64)> = kept
        .par_iter()
        .map(|&c| {
            let t = cutoff_labels(y, c);
            let (alpha, bias) = fit_logistic(k, &t, hp.lambda);
            let scores: Vec<f64> = (k * &alpha).iter().map(|f| f + bias).collect();
            let sigma = population_std(&scores);
            let model = KernelModel {
                support: x.to_vec(),
                weights: alpha.iter().copied().collect(),
                gamma: hp.gamma,
                lambda: hp.lambda,
                bias,
            };
            (model, sigma)
        })
        .collect();
    if let Some(i) = fitted.iter().position(|(_, s)| s.is_nan() || *s <= 0.0) {
        return Err(Error::DegenerateLabels(format!(
            "classifier for cutoff {} has constant training scores",
            kept[i]
        )));
    }
    let top = *kept.last().unwrap() as f64;
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(top);
    let (classifiers, sigmas) = fitted.into_iter().unzip();
    Ok((
        OrdinalEnsemble {
            cutoffs: kept,
            classifiers,
            sigmas,
            y_min,
            y_max,
        },
        dropped,
    ))
}

/// Returns the ensemble and the cutoffs that were dropped because they do
/// not split `y`.
pub fn train_ordinal(
    x: &[Vec<f64>],
    y: &[f64],
    cutoffs: &[u32],
    hp: Hyper,
) -> Result<(OrdinalEnsemble, Vec<u32>)> {
    validate_xy(x, y, 2)?;
    check_hyper(hp)?;
    ordinal_from_gram(&gram(x, hp.gamma), x, y, cutoffs, hp)
}

impl OrdinalEnsemble {
    /// Standardized scores `d / σ_c`, one per cutoff.
    pub fn standardized_scores(&self, x: &[f64]) -> Vec<f64> {
        self.classifiers
            .iter()
            .zip(&self.sigmas)
            .map(|(m, s)| m.predict(x) / s)
            .collect()
    }
}

/// Least-squares `d ≈ a c² + b c + e`, returned as `[e, b, a]`.
pub fn fit_quadratic(c: &[f64], d: &[f64]) -> Result<[f64; 3]> {
    if c.len() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            got: d.len(),
        });
    }
    if c.len() < 3 {
        return Err(Error::TooFewCutoffs {
            needed: 3,
            have: c.len(),
        });
    }
    // Centre the abscissa for conditioning, then expand back.
    let m = c.iter().sum::<f64>() / c.len() as f64;
    let a = DMatrix::from_fn(c.len(), 3, |i, j| (c[i] - m).powi(j as i32));
    let rhs = DVector::from_column_slice(d);
    let coef = a
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let (q0, q1, q2) = (coef[0], coef[1], coef[2]);
    Ok([q0 - q1 * m + q2 * m * m, q1 - 2.0 * q2 * m, q2])
}

/// Root of `e + b c + a c²` in `[lo, hi]` where the polynomial goes from
/// negative to positive.
pub fn ascending_root(coef: [f64; 3], lo: f64, hi: f64) -> Option<f64> {
    let [e, b, a] = coef;
    let scale = e.abs().max(b.abs()).max(a.abs());
    let slack = 1e-9 * (hi - lo).abs().max(1.0);
    let in_range = |r: f64| r >= lo - slack && r <= hi + slack;
    let rising = |r: f64| 2.0 * a * r + b > 0.0;
    if a.abs() <= 1e-12 * scale {
        if b > 0.0 {
            let r = -e / b;
            return in_range(r).then_some(r.clamp(lo, hi));
        }
        return None;
    }
    let disc = b * b - 4.0 * a * e;
    if disc <= 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let roots = [q / a, e / q];
    roots
        .into_iter()
        .filter(|&r| r.is_finite() && in_range(r) && rising(r))
        .map(|r| r.clamp(lo, hi))
        .next()
}

/// Continuous p_min estimate from the ensemble; `x` is standardized.
pub fn predict_ordinal(ens: &OrdinalEnsemble, x: &[f64]) -> Result<f64> {
    if ens.cutoffs.len() < 3 {
        return Err(Error::TooFewCutoffs {
            needed: 3,
            have: ens.cutoffs.len(),
        });
    }
    let c: Vec<f64> = ens.cutoffs.iter().map(|&c| c as f64).collect();
    ordinal_estimate(&c, &ens.standardized_scores(x), ens.y_min, ens.y_max)
}

/// Zero crossing of the quadratic fit to standardized scores `d` over
/// cutoffs `c`, falling back to a majority vote between `y_min` and `y_max`.
pub fn ordinal_estimate(c: &[f64], d: &[f64], y_min: f64, y_max: f64) -> Result<f64> {
    let coef = fit_quadratic(c, d)?;
    if let Some(r) = ascending_root(coef, c[0], c[c.len() - 1]) {
        return Ok(r);
    }
    let first = d.iter().filter(|&&s| s > 0.0).count();
    Ok(if first > d.len() - first {
        y_min
    } else {
        y_max
    })
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput(
            "correlation needs at least 2 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("median of an empty sequence".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Ok(if v.len().is_multiple_of(2) {
        0.5 * (v[h - 1] + v[h])
    } else {
        v[h]
    })
}

pub fn median_abs_err(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let errs: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect();
    median(&errs)
}

/// Fold index per row, stratified by `groups`. Each group is shuffled with
/// the seed and dealt round-robin, continuing where the previous group
/// stopped so fold sizes stay balanced.
pub fn stratified_folds(groups: &[String], k: usize, seed: u64) -> Vec<usize> {
    let mut names: Vec<&String> = groups.iter().collect();
    names.sort();
    names.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; groups.len()];
    let mut next = 0;
    for name in names {
        let mut members: Vec<usize> = (0..groups.len()).filter(|&i| &groups[i] == name).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: Hyper,
    pub best_score: f64,
    /// Median absolute error of every grid point, in grid order.
    pub grid: Vec<(Hyper, f64)>,
}

fn grid_points() -> Vec<Hyper> {
    GAMMA_GRID
        .iter()
        .flat_map(|&gamma| {
            LAMBDA_GRID
                .iter()
                .map(move |&lambda| Hyper { gamma, lambda })
        })
        .collect()
}

fn fold_split(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != f)
}

/// Out-of-fold median absolute error for every grid point; the first grid
/// point with the lowest error wins.
fn cross_validate<F>(
    x: &[Vec<f64>],
    y: &[f64],
    groups: &[String],
    seed: u64,
    fit_predict: F,
) -> Result<CvResult>
where
    F: Fn(&DMatrix<f64>, &[usize], &[usize], Hyper) -> Option<Vec<f64>> + Sync,
{
    validate_xy(x, y, CV_FOLDS)?;
    if groups.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: groups.len(),
        });
    }
    let folds = stratified_folds(groups, CV_FOLDS, seed);
    let grams: Vec<DMatrix<f64>> = GAMMA_GRID.par_iter().map(|&g| gram(x, g)).collect();
    let grid: Vec<(Hyper, f64)> = grid_points()
        .into_par_iter()
        .map(|hp| {
            let gi = GAMMA_GRID.iter().position(|&g| g == hp.gamma).unwrap();
            let k = &grams[gi];
            let mut pred = Vec::with_capacity(y.len());
            let mut truth = Vec::with_capacity(y.len());
            for f in 0..CV_FOLDS {
                let (train, test) = fold_split(&folds, f);
                if test.is_empty() {
                    continue;
                }
                match fit_predict(k, &train, &test, hp) {
                    Some(p) => {
                        pred.extend(p);
                        truth.extend(test.iter().map(|&i| y[i]));
                    }
                    None => return (hp, f64::INFINITY),
                }
            }
            (hp, median_abs_err(&pred, &truth).unwrap_or(f64::INFINITY))
        })
        .collect();
    let (best, best_score) =
        grid.iter()
            .copied()
            .fold((grid[0].0, f64::INFINITY), |acc, (hp, s)| {
                if s < acc.1 {
                    (hp, s)
                } else {
                    acc
                }
            });
    if !best_score.is_finite() {
        return Err(Error::InsufficientData(
            "no hyperparameter setting could be cross-validated".into(),
        ));
    }
    Ok(CvResult {
        best,
        best_score,
        grid,
    })
}

/// Grid search for the regressor. `x` is standardized.
pub fn cross_validate_regressor(
    x: &[Vec<f64>],
    y: &[f64],
    groups: &[String],
    seed: u64,
) -> Result<CvResult> {
    cross_validate(x, y, groups, seed, |k, train, test, hp| {
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let (w, bias) = ridge_weights(sub_gram(k, train, train), &ytr, hp.lambda).ok()?;
        let kt = sub_gram(k, test, train);
        Some(
            (&kt * DVector::from_vec(w))
                .iter()
                .map(|v| v + bias)
                .collect(),
        )
    })
}

/// Grid search for the ordinal ensemble. `x` is standardized.
pub fn cross_validate_ordinal(
    x: &[Vec<f64>],
    y: &[f64],
    groups: &[String],
    cutoffs: &[u32],
    seed: u64,
) -> Result<CvResult> {
    cross_validate(x, y, groups, seed, |k, train, test, hp| {
        let xtr: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let (ens, _) =
            ordinal_from_gram(&sub_gram(k, train, train), &xtr, &ytr, cutoffs, hp).ok()?;
        test.iter()
            .map(|&i| predict_ordinal(&ens, &x[i]).ok())
            .collect()
    })
}

/// Standardizer plus both trained models, as persisted to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub standardizer: Standardizer,
    pub regressor: KernelModel,
    pub ensemble: OrdinalEnsemble,
}

impl Predictor {
    pub fn predict_regression(&self, features: &[f64]) -> Result<f64> {
        Ok(self
            .regressor
            .predict(&self.standardizer.apply_row(features)?))
    }

    pub fn predict_ordinal(&self, features: &[f64]) -> Result<f64> {
        predict_ordinal(&self.ensemble, &self.standardizer.apply_row(features)?)
    }

    /// Flat text: one keyword line per block, floats in shortest
    /// round-trip form.
    pub fn to_text(&self) -> String {
        fn floats(v: &[f64]) -> String {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        }
        fn kernel(out: &mut String, m: &KernelModel) {
            writeln!(
                out,
                "kernel {:?} {:?} {:?} {}",
                m.gamma,
                m.lambda,
                m.bias,
                m.support.len()
            )
            .unwrap();
            for (w, s) in m.weights.iter().zip(&m.support) {
                writeln!(out, "{w:?} {}", floats(s)).unwrap();
            }
        }
        let s = &self.standardizer;
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "dim {}", s.dim()).unwrap();
        writeln!(out, "means {}", floats(&s.means)).unwrap();
        writeln!(out, "stds {}", floats(&s.stds)).unwrap();
        let cc: Vec<String> = s.constant_columns.iter().map(usize::to_string).collect();
        writeln!(out, "constant {}", cc.join(" ")).unwrap();
        writeln!(out, "regressor").unwrap();
        kernel(&mut out, &self.regressor);
        let e = &self.ensemble;
        writeln!(
            out,
            "ensemble {} {:?} {:?}",
            e.cutoffs.len(),
            e.y_min,
            e.y_max
        )
        .unwrap();
        for ((c, sigma), m) in e.cutoffs.iter().zip(&e.sigmas).zip(&e.classifiers) {
            writeln!(out, "cutoff {c} {sigma:?}").unwrap();
            kernel(&mut out, m);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cur = Cursor::new(text);
        let (no, head) = cur.line("")?;
        if head.join(" ") != MODEL_HEADER {
            return Err(cur.err(no, "not a model file or unsupported version"));
        }
        let (no, v) = cur.line("dim")?;
        let dim: usize = cur.num(no, v.first().map_or("", String::as_str))?;
        let mut vector = |key: &str| -> Result<Vec<f64>> {
            let (no, v) = cur.line(key)?;
            let out: Vec<f64> = cur.nums(no, &v)?;
            if out.len() != dim {
                return Err(cur.err(no, "wrong number of values"));
            }
            Ok(out)
        };
        let means = vector("means")?;
        let stds = vector("stds")?;
        let (no, v) = cur.line("constant")?;
        let standardizer = Standardizer {
            means,
            stds,
            constant_columns: cur.nums(no, &v)?,
        };
        cur.line("regressor")?;
        let regressor = cur.kernel(dim)?;
        let (no, v) = cur.line("ensemble")?;
        if v.len() != 3 {
            return Err(cur.err(no, "ensemble line needs count y_min y_max"));
        }
        let count: usize = cur.num(no, &v[0])?;
        let mut ensemble = OrdinalEnsemble {
            cutoffs: Vec::new(),
            classifiers: Vec::new(),
            sigmas: Vec::new(),
            y_min: cur.num(no, &v[1])?,
            y_max: cur.num(no, &v[2])?,
        };
        for _ in 0..count {
            let (no, v) = cur.line("cutoff")?;
            if v.len() != 2 {
                return Err(cur.err(no, "cutoff line needs c and σ"));
            }
            ensemble.cutoffs.push(cur.num(no, &v[0])?);
            ensemble.sigmas.push(cur.num(no, &v[1])?);
            ensemble.classifiers.push(cur.kernel(dim)?);
        }
        Ok(Predictor {
            standardizer,
            regressor,
            ensemble,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, msg: &str) -> Error {
        Error::ModelFormat(format!("line {line}: {msg}"))
    }

    /// Next line split on whitespace; checks and strips a leading keyword
    /// unless `key` is empty.
    fn line(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let (i, l) = self
            .lines
            .next()
            .ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))?;
        let mut parts = l.split_whitespace().map(str::to_string);
        if !key.is_empty() && parts.next().as_deref() != Some(key) {
            return Err(self.err(i + 1, &format!("expected `{key}`")));
        }
        Ok((i + 1, parts.collect()))
    }

    fn num<T: std::str::FromStr>(&self, line: usize, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(line, &format!("bad number `{s}`")))
    }

    fn nums<T: std::str::FromStr>(&self, line: usize, v: &[String]) -> Result<Vec<T>> {
        v.iter().map(|s| self.num(line, s)).collect()
    }

    fn kernel(&mut self, dim: usize) -> Result<KernelModel> {
        let (no, v) = self.line("kernel")?;
        if v.len() != 4 {
            return Err(self.err(no, "kernel line needs γ, λ, bias and count"));
        }
        let count: usize = self.num(no, &v[3])?;
        let mut model = KernelModel {
            support: Vec::with_capacity(count),
            weights: Vec::with_capacity(count),
            gamma: self.num(no, &v[0])?,
            lambda: self.num(no, &v[1])?,
            bias: self.num(no, &v[2])?,
        };
        for _ in 0..count {
            let (no, row) = self.line("")?;
            let vals: Vec<f64> = self.nums(no, &row)?;
            if vals.len() != dim + 1 {
                return Err(self.err(no, "support row has the wrong width"));
            }
            model.weights.push(vals[0]);
            model.support.push(vals[1..].to_vec());
        }
        Ok(model)
    }
}
