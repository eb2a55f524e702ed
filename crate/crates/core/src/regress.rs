//! Gaussian-kernel kernel ridge regression, nested cross-validation with
//! grid search, MAE scoring, and learning-curve power-law fitting.
//!
//! The nested scheme follows the 80/10/10 split: per repeat the molecules
//! are shuffled once; each outer fold holds out its own 10% test block,
//! the kernel length scale and ridge strength are grid-searched on an 80/10
//! train/validation split of the remainder, and the winning pair is refit on
//! the full 90% before scoring the test block. Every data-dependent fitting
//! step (PCA means, reducers, demixing matrices, the median-distance scale
//! of the sigma grid) runs strictly inside the loop on non-test data.

use crate::dataio::{DataError, FeatureTable, LabelVector};
use crate::fusion::{self, FusionError, FusionFit, FusionSpec};
use crate::linalg::{self, LinalgError};
use crate::stats::SummaryStats;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("kernel length scale must be positive, got {0}")]
    BadSigma(f64),

    #[error("ridge strength must be nonnegative, got {0}")]
    BadLambda(f64),

    #[error("prediction/truth length mismatch: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },

    #[error("hyperparameter grid is empty")]
    EmptyGrid,

    #[error(
        "degenerate split: N={n} cannot supply {folds} folds of {test} test, {val} validation"
    )]
    DegenerateSplit {
        n: usize,
        folds: usize,
        test: usize,
        val: usize,
    },

    #[error("kernel system is numerically singular at lambda={lambda:.3e}: {detail} (duplicate inputs at tiny ridge?)")]
    IllConditioned { lambda: f64, detail: String },

    #[error("learning-curve fit needs at least 2 points with distinct sizes")]
    NotEnoughPoints,

    #[error("learning-curve points must be positive, got ({n}, {mae})")]
    NonPositivePoint { n: f64, mae: f64 },

    #[error("test data leaked into a fitted quantity: {0}")]
    Contaminated(String),

    #[error(transparent)]
    Fusion(#[from] FusionError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Fitted kernel ridge regression model with a Gaussian kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrrModel {
    /// d×M training inputs the dual weights refer to.
    pub support: Array2<f64>,
    pub dual_weights: Array1<f64>,
    pub sigma: f64,
    pub lambda: f64,
    pub train_mean_label: f64,
}

/// Squared Euclidean distances between the columns of two d×· matrices.
pub fn pairwise_sq_dists(xa: &Array2<f64>, xb: &Array2<f64>) -> Array2<f64> {
    assert_eq!(xa.nrows(), xb.nrows(), "shared feature dimension");
    let d = xa.nrows();
    let mut out = Array2::<f64>::zeros((xa.ncols(), xb.ncols()));
    for i in 0..xa.ncols() {
        for j in 0..xb.ncols() {
            let mut acc = 0.0;
            for r in 0..d {
                let diff = xa[[r, i]] - xb[[r, j]];
                acc += diff * diff;
            }
            out[[i, j]] = acc;
        }
    }
    out
}

fn kernel_from_sq_dists(sq: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let scale = -1.0 / (2.0 * sigma * sigma);
    sq.mapv(|d2| (d2 * scale).exp())
}

/// Gaussian kernel matrix: entries `exp(-||xa_i - xb_j||^2 / (2 sigma^2))`.
pub fn gaussian_kernel(
    xa: &Array2<f64>,
    xb: &Array2<f64>,
    sigma: f64,
) -> Result<Array2<f64>, RegressError> {
    if !(sigma > 0.0) {
        return Err(RegressError::BadSigma(sigma));
    }
    Ok(kernel_from_sq_dists(&pairwise_sq_dists(xa, xb), sigma))
}

fn krr_fit_from_sq_dists(
    x: &Array2<f64>,
    sq: &Array2<f64>,
    y: &Array1<f64>,
    sigma: f64,
    lambda: f64,
) -> Result<KrrModel, RegressError> {
    if !(sigma > 0.0) {
        return Err(RegressError::BadSigma(sigma));
    }
    if lambda < 0.0 {
        return Err(RegressError::BadLambda(lambda));
    }
    let m = y.len();
    assert_eq!(x.ncols(), m, "one label per training column");

    let mean = y.sum() / m as f64;
    let centered = y.mapv(|v| v - mean);

    let mut k = kernel_from_sq_dists(sq, sigma);
    for i in 0..m {
        k[[i, i]] += lambda;
    }
    let chol = linalg::cholesky(&k).map_err(|e| RegressError::IllConditioned {
        lambda,
        detail: e.to_string(),
    })?;
    let mut alpha = linalg::cholesky_solve(&chol, &centered);
    // One step of iterative refinement keeps the residual near machine
    // precision even when tiny ridges meet wide kernels.
    let correction = linalg::cholesky_solve(&chol, &(&k.dot(&alpha) - &centered));
    alpha -= &correction;

    // The dual weights must actually solve the system.
    let residual = &k.dot(&alpha) - &centered;
    let res_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if res_norm > 1e-8 * y_norm.max(1.0) {
        return Err(RegressError::IllConditioned {
            lambda,
            detail: format!("solve residual {res_norm:.3e} exceeds 1e-8 x ||y||"),
        });
    }

    Ok(KrrModel {
        support: x.clone(),
        dual_weights: alpha,
        sigma,
        lambda,
        train_mean_label: mean,
    })
}

/// Fit KRR on d×M inputs and an M-vector of labels. Labels are centered
/// internally; `lambda = 0` is allowed (useful only for tiny noiseless
/// problems).
pub fn krr_fit(
    x: &Array2<f64>,
    y: &Array1<f64>,
    sigma: f64,
    lambda: f64,
) -> Result<KrrModel, RegressError> {
    let sq = pairwise_sq_dists(x, x);
    krr_fit_from_sq_dists(x, &sq, y, sigma, lambda)
}

impl KrrModel {
    /// Predict at the columns of a d×Q query matrix.
    pub fn predict(&self, x: &Array2<f64>) -> Array1<f64> {
        let k = kernel_from_sq_dists(&pairwise_sq_dists(&self.support, x), self.sigma);
        let mut out = self.dual_weights.dot(&k);
        out.mapv_inplace(|v| v + self.train_mean_label);
        out
    }
}

/// Mean absolute error between two equal-length vectors.
pub fn mae(pred: &Array1<f64>, truth: &Array1<f64>) -> Result<f64, RegressError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(RegressError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    Ok(pred
        .iter()
        .zip(truth.iter())
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Least-squares fit of `mae = C * n^alpha` through log-log space.
/// Returns `(C, alpha)`.
pub fn fit_learning_curve(points: &[(f64, f64)]) -> Result<(f64, f64), RegressError> {
    if points.len() < 2 {
        return Err(RegressError::NotEnoughPoints);
    }
    for &(n, m) in points {
        if n <= 0.0 || m <= 0.0 {
            return Err(RegressError::NonPositivePoint { n, mae: m });
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, m)| (n.ln(), m.ln())).collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|&(x, _)| x).sum::<f64>() / count;
    let mean_y = logs.iter().map(|&(_, y)| y).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(RegressError::NotEnoughPoints);
    }
    let sxy: f64 = logs
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let alpha = sxy / sxx;
    let log_c = mean_y - alpha * mean_x;
    Ok((log_c.exp(), alpha))
}

/// Nested cross-validation configuration. `sigma_multipliers` scale the
/// median pairwise training distance to form the length-scale grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub repeats: usize,
    pub sigma_multipliers: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            outer_folds: 5,
            repeats: 30,
            sigma_multipliers: (-4..=4).map(|i| 2.0f64.powi(i)).collect(),
            lambda_grid: (1..=9).map(|i| 10.0f64.powi(-i)).collect(),
            seed: 0,
        }
    }
}

/// One (repeat, fold) cell of a cross-validation run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CvCell {
    pub repeat: usize,
    pub fold: usize,
    pub test_mae: f64,
    pub sigma: f64,
    pub lambda: f64,
}

/// Full cross-validation report: per-cell results plus aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub property: String,
    pub feature_set: String,
    pub n_used: usize,
    pub feature_dimension: usize,
    pub cells: Vec<CvCell>,
    /// Aggregates over all repeat×fold cells.
    pub mae: SummaryStats,
    /// Mean of per-repeat mean MAEs (identical weighting here since every
    /// repeat contributes the same number of folds; reported separately so
    /// both averaging conventions are visible).
    pub mean_of_repeat_means: f64,
}

impl CvReport {
    pub fn recompute_aggregates(&self) -> (SummaryStats, f64) {
        let values: Vec<f64> = self.cells.iter().map(|c| c.test_mae).collect();
        let stats = SummaryStats::from_values(&values);
        let repeats: Vec<usize> = {
            let mut r: Vec<usize> = self.cells.iter().map(|c| c.repeat).collect();
            r.sort_unstable();
            r.dedup();
            r
        };
        let mut repeat_means = Vec::with_capacity(repeats.len());
        for r in repeats {
            let vals: Vec<f64> = self
                .cells
                .iter()
                .filter(|c| c.repeat == r)
                .map(|c| c.test_mae)
                .collect();
            repeat_means.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
        let grand = repeat_means.iter().sum::<f64>() / repeat_means.len() as f64;
        (stats, grand)
    }
}

/// Median pairwise Euclidean distance between feature columns; the
/// dimension-free scale for the sigma grid. Falls back to 1.0 when every
/// pair coincides.
pub fn median_pairwise_distance(x: &Array2<f64>) -> f64 {
    let n = x.ncols();
    if n < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for r in 0..x.nrows() {
                let diff = x[[r, i]] - x[[r, j]];
                acc += diff * diff;
            }
            dists.push(acc.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = crate::stats::quantile_sorted(&dists, 0.5);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

struct FoldSplit {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

fn fold_split(
    perm: &[usize],
    fold: usize,
    n_test: usize,
    n_val: usize,
) -> FoldSplit {
    let n = perm.len();
    let test_start = fold * n_test;
    let test: Vec<usize> = perm[test_start..test_start + n_test].to_vec();
    let val: Vec<usize> = (0..n_val)
        .map(|i| perm[(test_start + n_test + i) % n])
        .collect();
    let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
    let in_val: std::collections::HashSet<usize> = val.iter().copied().collect();
    let train: Vec<usize> = perm
        .iter()
        .copied()
        .filter(|i| !in_test.contains(i) && !in_val.contains(i))
        .collect();
    FoldSplit { train, val, test }
}

fn select_labels(y: &Array1<f64>, idx: &[usize]) -> Array1<f64> {
    Array1::from_iter(idx.iter().map(|&i| y[i]))
}

fn select_tables(tables: &[FeatureTable], idx: &[usize]) -> Vec<FeatureTable> {
    tables.iter().map(|t| t.select_columns(idx)).collect()
}

fn assert_all_finite(name: &str, values: impl Iterator<Item = f64>) -> Result<(), RegressError> {
    for v in values {
        if !v.is_finite() {
            return Err(RegressError::Contaminated(name.to_string()));
        }
    }
    Ok(())
}

fn check_fit_uncontaminated(
    fit: &FusionFit,
    model: &KrrModel,
    train_features: &Array2<f64>,
) -> Result<(), RegressError> {
    assert_all_finite("fused training features", train_features.iter().copied())?;
    assert_all_finite("dual weights", model.dual_weights.iter().copied())?;
    for r in &fit.reducers {
        assert_all_finite("reducer mean", r.mean.iter().copied())?;
        assert_all_finite("reduction matrix", r.matrix().iter().copied())?;
    }
    if let Some(demix) = &fit.demixing {
        for w in &demix.w {
            assert_all_finite("demixing matrix", w.iter().copied())?;
        }
    }
    let train_pred = model.predict(train_features);
    assert_all_finite("training predictions", train_pred.iter().copied())?;
    Ok(())
}

fn run_cv(
    tables: &[FeatureTable],
    labels: &LabelVector,
    cfg: &CvConfig,
    spec: &FusionSpec,
    poison_test: bool,
) -> Result<(Vec<CvCell>, usize), RegressError> {
    if cfg.sigma_multipliers.is_empty() || cfg.lambda_grid.is_empty() {
        return Err(RegressError::EmptyGrid);
    }
    let aligned = crate::dataio::align_to_first(tables)?;
    if aligned.is_empty() {
        return Err(FusionError::EmptyInput.into());
    }
    let y = labels.align_to(&aligned[0].molecule_ids)?;
    let n = aligned[0].n();

    let n_test = (n / 10).max(1);
    let n_val = n_test;
    let n_train = n as i64 - (cfg.outer_folds * n_test) as i64;
    if cfg.outer_folds == 0
        || cfg.outer_folds * n_test > n
        || n_train < 0
        || n < n_test + n_val + 2
    {
        return Err(RegressError::DegenerateSplit {
            n,
            folds: cfg.outer_folds,
            test: n_test,
            val: n_val,
        });
    }

    let mut cells = Vec::with_capacity(cfg.repeats * cfg.outer_folds);
    let mut feature_dimension = 0usize;

    for repeat in 0..cfg.repeats {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(repeat as u64);
        perm.shuffle(&mut rng);

        for fold in 0..cfg.outer_folds {
            let split = fold_split(&perm, fold, n_test, n_val);

            // Optionally poison the held-out test columns with NaN to prove
            // no fitted quantity can depend on them.
            let working: Vec<FeatureTable> = if poison_test {
                aligned
                    .iter()
                    .map(|t| {
                        let mut poisoned = t.clone();
                        for &col in &split.test {
                            poisoned.data.column_mut(col).fill(f64::NAN);
                        }
                        poisoned
                    })
                    .collect()
            } else {
                aligned.clone()
            };

            let train_tables = select_tables(&working, &split.train);
            let val_tables = select_tables(&working, &split.val);
            let y_train = select_labels(&y.values, &split.train);
            let y_val = select_labels(&y.values, &split.val);

            // Stage 2 runs on training data only.
            let fit = fusion::fit_fusion(&train_tables, spec)?;
            let train_features = fit.transform(&train_tables)?;
            let val_features = fit.transform(&val_tables)?;

            let median = median_pairwise_distance(&train_features);
            let train_sq = pairwise_sq_dists(&train_features, &train_features);

            let mut candidates: Vec<(f64, f64, f64)> = Vec::new(); // (mae, sigma, lambda)
            for &lambda in &cfg.lambda_grid {
                for &mult in &cfg.sigma_multipliers {
                    let sigma = mult * median;
                    // A grid cell whose system is numerically singular
                    // simply cannot win; the search moves on.
                    let model = match krr_fit_from_sq_dists(
                        &train_features,
                        &train_sq,
                        &y_train,
                        sigma,
                        lambda,
                    ) {
                        Ok(m) => m,
                        Err(RegressError::IllConditioned { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    let val_mae = mae(&model.predict(&val_features), &y_val)?;
                    candidates.push((val_mae, sigma, lambda));
                }
            }
            // Preference order: lowest validation MAE, ties broken toward
            // the smoother model (larger lambda, then larger sigma).
            candidates.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("finite MAE")
                    .then(b.2.partial_cmp(&a.2).expect("finite lambda"))
                    .then(b.1.partial_cmp(&a.1).expect("finite sigma"))
            });
            if candidates.is_empty() {
                return Err(RegressError::IllConditioned {
                    lambda: *cfg.lambda_grid.last().expect("non-empty grid"),
                    detail: "every grid cell was numerically singular".to_string(),
                });
            }

            // Refit the whole pipeline on train+validation (90%). The 90%
            // block can be singular for a winner that fit the 80% block
            // (duplicate feature vectors joining at a tiny ridge), so fall
            // back through the preference order.
            let mut refit_idx = split.train.clone();
            refit_idx.extend_from_slice(&split.val);
            let refit_tables = select_tables(&working, &refit_idx);
            let y_refit = select_labels(&y.values, &refit_idx);
            let refit = fusion::fit_fusion(&refit_tables, spec)?;
            let refit_features = refit.transform(&refit_tables)?;
            let mut fitted = None;
            for &(_, sigma, lambda) in &candidates {
                match krr_fit(&refit_features, &y_refit, sigma, lambda) {
                    Ok(model) => {
                        fitted = Some((model, sigma, lambda));
                        break;
                    }
                    Err(RegressError::IllConditioned { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            let Some((model, sigma, lambda)) = fitted else {
                return Err(RegressError::IllConditioned {
                    lambda: *cfg.lambda_grid.last().expect("non-empty grid"),
                    detail: "no validated grid cell survived the 90% refit".to_string(),
                });
            };

            if poison_test {
                check_fit_uncontaminated(&refit, &model, &refit_features)?;
            }
            feature_dimension = refit.feature_dimension(&refit_tables)?;

            let test_tables = select_tables(&working, &split.test);
            let y_test = select_labels(&y.values, &split.test);
            let test_features = refit.transform(&test_tables)?;
            let test_mae = if poison_test {
                f64::NAN
            } else {
                mae(&model.predict(&test_features), &y_test)?
            };

            cells.push(CvCell {
                repeat,
                fold,
                test_mae,
                sigma,
                lambda,
            });
        }
    }
    Ok((cells, feature_dimension))
}

/// Nested cross-validation of the full fusion + KRR pipeline.
pub fn nested_cv(
    tables: &[FeatureTable],
    labels: &LabelVector,
    cfg: &CvConfig,
    spec: &FusionSpec,
) -> Result<CvReport, RegressError> {
    let (cells, feature_dimension) = run_cv(tables, labels, cfg, spec, false)?;
    let values: Vec<f64> = cells.iter().map(|c| c.test_mae).collect();
    let mae = SummaryStats::from_values(&values);
    let report = CvReport {
        property: labels.property_name.clone(),
        feature_set: spec.describe(tables),
        n_used: tables[0].n(),
        feature_dimension,
        cells,
        mae,
        mean_of_repeat_means: 0.0,
    };
    let (_, grand) = report.recompute_aggregates();
    Ok(CvReport {
        mean_of_repeat_means: grand,
        ..report
    })
}

/// Dry-run leak check: poisons each fold's test columns with NaN sentinels
/// and verifies that no fitted quantity (reducers, demixing matrices, dual
/// weights, training predictions) absorbs them.
pub fn verify_no_test_leakage(
    tables: &[FeatureTable],
    labels: &LabelVector,
    cfg: &CvConfig,
    spec: &FusionSpec,
) -> Result<(), RegressError> {
    run_cv(tables, labels, cfg, spec, true).map(|_| ())
}
