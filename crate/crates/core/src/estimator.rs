//! Regression fitting, accuracy metrics, k-fold cross-validation, scenario
//! prediction and the fallout experiment.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjustment::{audit_feature_set, AdjustmentError, EffectKind, QuerySpec, Verdict};
use crate::dataset::{Dataset, DatasetError};
use crate::format::FORMAT_VERSION;
use crate::scm::{sample, scm_graph, true_ace, true_direct_effect, ScmError, ScmSpec};

/// Ridge added to the normal-equation diagonal when it is not numerically
/// positive definite.
pub const OLS_RIDGE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("need more than {needed} rows, got {rows}")]
    InsufficientRows { rows: usize, needed: usize },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("target {0} is also a feature")]
    TargetIsFeature(String),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations")]
    TooShort,
    #[error("target mean is zero; NRMSE undefined")]
    ZeroMeanTarget,
    #[error("target range is zero; range-normalised NRMSE undefined")]
    ZeroRangeTarget,
    #[error("target is constant; R² undefined")]
    ConstantTarget,
    #[error("observation {0} has |y| + |ŷ| = 0; SMAPE undefined")]
    ZeroPair(usize),
    #[error("k-fold needs at least 2k rows (k = {k}, rows = {rows})")]
    TooFewRows { k: usize, rows: usize },
    #[error("feature {0} missing from model or base row")]
    MissingFeature(String),
    #[error("no arms given")]
    NoArms,
    #[error("arm {arm}: {reason}")]
    InvalidArm { arm: String, reason: String },
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Adjustment(#[from] AdjustmentError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl EstimatorError {
    pub fn kind(&self) -> &'static str {
        match self {
            EstimatorError::InsufficientRows { .. } => "InsufficientRows",
            EstimatorError::UnknownColumn(_) => "UnknownColumn",
            EstimatorError::TargetIsFeature(_) => "TargetIsFeature",
            EstimatorError::LengthMismatch(..) => "LengthMismatch",
            EstimatorError::TooShort => "TooShort",
            EstimatorError::ZeroMeanTarget => "ZeroMeanTarget",
            EstimatorError::ZeroRangeTarget => "ZeroRangeTarget",
            EstimatorError::ConstantTarget => "ConstantTarget",
            EstimatorError::ZeroPair(_) => "ZeroPair",
            EstimatorError::TooFewRows { .. } => "TooFewRows",
            EstimatorError::MissingFeature(_) => "MissingFeature",
            EstimatorError::NoArms => "NoArms",
            EstimatorError::InvalidArm { .. } => "InvalidArm",
            EstimatorError::Scm(e) => e.kind(),
            EstimatorError::Adjustment(e) => e.kind(),
            EstimatorError::Dataset(e) => e.kind(),
        }
    }
}

type Result<T> = std::result::Result<T, EstimatorError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Classical OLS standard errors of the coefficients.
    pub std_errors: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(c, x)| c * x).sum::<f64>()
    }

    pub fn predict(&self, d: &Dataset) -> Result<Vec<f64>> {
        let cols = feature_columns(d, &self.feature_names)?;
        Ok((0..d.row_count()).map(|r| self.predict_row(&cols.iter().map(|c| c[r]).collect::<Vec<_>>())).collect())
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.feature_names.iter().position(|f| f == name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.feature_names.iter().position(|f| f == name).map(|i| self.std_errors[i])
    }
}

fn feature_columns<'a>(d: &'a Dataset, features: &[String]) -> Result<Vec<&'a [f64]>> {
    features
        .iter()
        .map(|f| d.column(f).map_err(|_| EstimatorError::UnknownColumn(f.clone())))
        .collect()
}

/// Least squares with intercept. Solves the centred normal equations by
/// Cholesky; a ridge of [`OLS_RIDGE`] is added only when the Gram matrix is
/// singular to working precision.
pub fn ols_fit(d: &Dataset, features: &[String], target: &str) -> Result<LinearModel> {
    if features.iter().any(|f| f == target) {
        return Err(EstimatorError::TargetIsFeature(target.to_string()));
    }
    let y = d.column(target).map_err(|_| EstimatorError::UnknownColumn(target.to_string()))?;
    let cols = feature_columns(d, features)?;
    let n = d.row_count();
    let p = features.len();
    if n <= p + 1 {
        return Err(EstimatorError::InsufficientRows { rows: n, needed: p + 1 });
    }
    let mean = |c: &[f64]| c.iter().sum::<f64>() / n as f64;
    let x_means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let y_mean = mean(y);
    let x = DMatrix::from_fn(n, p, |r, j| cols[j][r] - x_means[j]);
    let yc = DVector::from_fn(n, |r, _| y[r] - y_mean);
    let gram = x.transpose() * &x;
    let xty = x.transpose() * &yc;
    let chol = gram
        .clone()
        .cholesky()
        .filter(|ch| (0..p).all(|i| ch.l_dirty()[(i, i)].powi(2) > 1e-12 * gram[(i, i)].max(f64::MIN_POSITIVE)))
        .unwrap_or_else(|| {
            let mut g = gram.clone();
            for i in 0..p {
                g[(i, i)] += OLS_RIDGE;
            }
            g.cholesky().expect("ridged Gram matrix is positive definite")
        });
    let beta = chol.solve(&xty);
    let resid = &yc - &x * &beta;
    let dof = (n - p - 1) as f64;
    let sigma2 = resid.dot(&resid) / dof;
    let inv = chol.inverse();
    let intercept = y_mean - beta.iter().zip(&x_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        feature_names: features.to_vec(),
        coefficients: beta.iter().copied().collect(),
        intercept,
        std_errors: (0..p).map(|i| (sigma2 * inv[(i, i)]).max(0.0).sqrt()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub nrmse: f64,
    pub smape: f64,
}

/// How RMSE is normalised for NRMSE.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NrmseNorm {
    #[default]
    Mean,
    Range,
}

/// R², NRMSE (RMSE over the target mean) and SMAPE as a fraction in [0, 2].
pub fn metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics> {
    metrics_with(y, yhat, NrmseNorm::Mean)
}

pub fn metrics_with(y: &[f64], yhat: &[f64], norm: NrmseNorm) -> Result<Metrics> {
    if y.len() != yhat.len() {
        return Err(EstimatorError::LengthMismatch(y.len(), yhat.len()));
    }
    if y.len() < 2 {
        return Err(EstimatorError::TooShort);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(EstimatorError::ConstantTarget);
    }
    let scale = match norm {
        NrmseNorm::Mean => {
            if mean == 0.0 {
                return Err(EstimatorError::ZeroMeanTarget);
            }
            mean.abs()
        }
        NrmseNorm::Range => {
            let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            if hi == lo {
                return Err(EstimatorError::ZeroRangeTarget);
            }
            hi - lo
        }
    };
    let mut smape = 0.0;
    for (i, (a, b)) in y.iter().zip(yhat).enumerate() {
        let denom = a.abs() + b.abs();
        if denom == 0.0 {
            return Err(EstimatorError::ZeroPair(i));
        }
        smape += 2.0 * (b - a).abs() / denom;
    }
    Ok(Metrics { r2: 1.0 - ss_res / ss_tot, nrmse: (ss_res / n).sqrt() / scale, smape: smape / n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub per_fold: Vec<Metrics>,
    pub mean: Metrics,
}

/// Seeded Fisher–Yates shuffle, then `k` contiguous folds; the first
/// `rows % k` folds take one extra row.
pub fn fold_assignment(rows: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..rows).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (rows / k, rows % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    folds
}

/// Cross-validates any fit/predict pair.
pub fn kfold_cv_with<F, P>(d: &Dataset, target: &str, k: usize, seed: u64, fit: F) -> Result<CvReport>
where
    F: Fn(&Dataset) -> Result<P>,
    P: Fn(&Dataset) -> Result<Vec<f64>>,
{
    let rows = d.row_count();
    if k < 2 || rows < 2 * k {
        return Err(EstimatorError::TooFewRows { k, rows });
    }
    let folds = fold_assignment(rows, k, seed);
    let mut per_fold = Vec::with_capacity(k);
    for (f, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> =
            folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, r)| r.iter().copied()).collect();
        let predictor = fit(&d.select_rows(&train_rows))?;
        let test = d.select_rows(test_rows);
        let yhat = predictor(&test)?;
        let y = test.column(target).map_err(|_| EstimatorError::UnknownColumn(target.to_string()))?;
        per_fold.push(metrics(y, &yhat)?);
    }
    let avg = |f: fn(&Metrics) -> f64| per_fold.iter().map(f).sum::<f64>() / k as f64;
    let mean = Metrics { r2: avg(|m| m.r2), nrmse: avg(|m| m.nrmse), smape: avg(|m| m.smape) };
    Ok(CvReport { k, per_fold, mean })
}

/// k-fold cross-validation of OLS.
pub fn kfold_cv(d: &Dataset, features: &[String], target: &str, k: usize, seed: u64) -> Result<CvReport> {
    kfold_cv_with(d, target, k, seed, |train| {
        let m = ols_fit(train, features, target)?;
        Ok(move |test: &Dataset| m.predict(test))
    })
}

/// Prediction difference when only the exposure moves from `t0` to `t1`, every
/// other feature held at its `base_row` value.
pub fn scenario_effect(
    m: &LinearModel,
    base_row: &BTreeMap<String, f64>,
    exposure: &str,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    if !m.feature_names.iter().any(|f| f == exposure) {
        return Err(EstimatorError::MissingFeature(exposure.to_string()));
    }
    let mut row = Vec::with_capacity(m.feature_names.len());
    for f in &m.feature_names {
        row.push(*base_row.get(f).ok_or_else(|| EstimatorError::MissingFeature(f.clone()))?);
    }
    let pos = m.feature_names.iter().position(|f| f == exposure).unwrap();
    row[pos] = t1;
    let high = m.predict_row(&row);
    row[pos] = t0;
    Ok(high - m.predict_row(&row))
}

/// Features whose test-case value lies outside the training range.
pub fn out_of_range_features(d: &Dataset, base_row: &BTreeMap<String, f64>) -> Vec<String> {
    base_row
        .iter()
        .filter(|(name, v)| {
            d.column(name).is_ok_and(|c| {
                let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
                **v < lo || **v > hi
            })
        })
        .map(|(n, _)| n.clone())
        .collect()
}

/// A depth-limited CART regression tree (squared-error splits).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    feature_names: Vec<String>,
    root: TreeNode,
}

#[derive(Debug, Clone, PartialEq)]
enum TreeNode {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl RegressionTree {
    pub fn fit(d: &Dataset, features: &[String], target: &str, max_depth: usize, min_leaf: usize) -> Result<Self> {
        let y = d.column(target).map_err(|_| EstimatorError::UnknownColumn(target.to_string()))?;
        let cols = feature_columns(d, features)?;
        let rows: Vec<usize> = (0..d.row_count()).collect();
        let root = grow(&cols, y, rows, max_depth, min_leaf.max(1));
        Ok(RegressionTree { feature_names: features.to_vec(), root })
    }

    pub fn predict(&self, d: &Dataset) -> Result<Vec<f64>> {
        let cols = feature_columns(d, &self.feature_names)?;
        Ok((0..d.row_count())
            .map(|r| {
                let mut node = &self.root;
                loop {
                    match node {
                        TreeNode::Leaf(v) => break *v,
                        TreeNode::Split { feature, threshold, left, right } => {
                            node = if cols[*feature][r] <= *threshold { left } else { right };
                        }
                    }
                }
            })
            .collect())
    }
}

fn grow(cols: &[&[f64]], y: &[f64], rows: Vec<usize>, depth: usize, min_leaf: usize) -> TreeNode {
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
    if depth == 0 || rows.len() < 2 * min_leaf {
        return TreeNode::Leaf(mean);
    }
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    let total_sq: f64 = rows.iter().map(|&r| y[r] * y[r]).sum();
    let parent_sse = total_sq - total * total / rows.len() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    for (j, col) in cols.iter().enumerate() {
        let mut sorted = rows.clone();
        sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let (mut s, mut sq) = (0.0, 0.0);
        for i in 0..sorted.len() - 1 {
            let v = y[sorted[i]];
            s += v;
            sq += v * v;
            let nl = (i + 1) as f64;
            let nr = (sorted.len() - i - 1) as f64;
            if i + 1 < min_leaf || sorted.len() - i - 1 < min_leaf || col[sorted[i]] == col[sorted[i + 1]] {
                continue;
            }
            let sse = (sq - s * s / nl) + ((total_sq - sq) - (total - s).powi(2) / nr);
            if best.map_or(true, |(b, _, _)| sse < b) {
                best = Some((sse, j, 0.5 * (col[sorted[i]] + col[sorted[i + 1]])));
            }
        }
    }
    match best {
        Some((sse, feature, threshold)) if sse < parent_sse => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| cols[feature][r] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(cols, y, l, depth - 1, min_leaf)),
                right: Box::new(grow(cols, y, r, depth - 1, min_leaf)),
            }
        }
        _ => TreeNode::Leaf(mean),
    }
}

/// Grid search over tree depth by k-fold mean R²; ties go to the shallower tree.
pub fn tree_depth_search(
    d: &Dataset,
    features: &[String],
    target: &str,
    depths: &[usize],
    k: usize,
    seed: u64,
) -> Result<(usize, CvReport)> {
    let mut best: Option<(usize, CvReport)> = None;
    for &depth in depths {
        let cv = kfold_cv_with(d, target, k, seed, |train| {
            let t = RegressionTree::fit(train, features, target, depth, 5)?;
            Ok(move |test: &Dataset| t.predict(test))
        })?;
        if best.as_ref().map_or(true, |(_, b)| cv.mean.r2 > b.mean.r2) {
            best = Some((depth, cv));
        }
    }
    best.ok_or(EstimatorError::NoArms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmsFile {
    pub format_version: u32,
    pub arms: Vec<Arm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub name: String,
    /// Model inputs: the exposures followed by the arm's features.
    pub features: Vec<String>,
    pub estimated_effect: f64,
    pub std_error: f64,
    pub cv_r2: f64,
    pub audit_verdict: Verdict,
    pub sign_agreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalloutReport {
    pub format_version: u32,
    pub exposure: String,
    pub outcome: String,
    pub effect_kind: EffectKind,
    /// Ground truth for the query's effect kind: path-sum ACE for total
    /// effects, the edge coefficient for direct effects.
    pub true_ace: f64,
    pub arms: Vec<ArmReport>,
}

impl FalloutReport {
    pub fn arm(&self, name: &str) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.name == name)
    }

    /// Plain-text table, one row per arm.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "exposure {} -> {} ({:?} effect), true effect {:+.4}\n",
            self.exposure, self.outcome, self.effect_kind, self.true_ace
        );
        out.push_str(&format!("{:<24} {:>10} {:>10} {:>8} {:>9} {:>6}\n", "Arm", "Estimate", "Std.err", "CV R²", "Audit", "Sign"));
        for a in &self.arms {
            out.push_str(&format!(
                "{:<24} {:>+10.4} {:>10.4} {:>8.3} {:>9} {:>6}\n",
                a.name,
                a.estimated_effect,
                a.std_error,
                a.cv_r2,
                a.audit_verdict.as_str(),
                if a.sign_agreement { "ok" } else { "FLIP" }
            ));
        }
        out
    }
}

/// Samples training data from the SCM, fits OLS per arm, and compares each
/// arm's estimated exposure effect with the analytic truth and the audit.
/// The effect is reported for the first listed exposure.
pub fn fallout_experiment(spec: &ScmSpec, q: &QuerySpec, arms: &[Arm], n: usize, seed: u64) -> Result<FalloutReport> {
    if arms.is_empty() {
        return Err(EstimatorError::NoArms);
    }
    let exposure = q.exposures.first().ok_or(AdjustmentError::NoExposure)?.clone();
    let g = scm_graph(spec);
    let query = q.resolve(&g)?;
    let truth = match q.effect_kind {
        EffectKind::Total => true_ace(spec, &exposure, q.t1, q.t0, &q.outcome)?,
        EffectKind::Direct => true_direct_effect(spec, &exposure, q.t1, q.t0, &q.outcome)?,
    };
    let data = sample(spec, n, seed);
    let base_row: BTreeMap<String, f64> = data
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), data.column_at(j).iter().sum::<f64>() / data.row_count() as f64))
        .collect();

    let mut reports = Vec::with_capacity(arms.len());
    for arm in arms {
        let invalid = |reason: String| EstimatorError::InvalidArm { arm: arm.name.clone(), reason };
        let mut features = q.exposures.clone();
        for f in &arm.features {
            if f == &q.outcome {
                return Err(invalid(format!("outcome {f} listed as a feature")));
            }
            if !features.contains(f) {
                features.push(f.clone());
            }
        }
        let covariates = features
            .iter()
            .filter(|f| !q.exposures.contains(f))
            .map(|f| g.index_of(f).map_err(|_| invalid(format!("unknown variable {f}"))))
            .collect::<Result<_>>()?;
        let audit = audit_feature_set(&g, &query, &covariates)?;
        let model = ols_fit(&data, &features, &q.outcome)?;
        let cv = kfold_cv(&data, &features, &q.outcome, 5, seed)?;
        let estimate = scenario_effect(&model, &base_row, &exposure, q.t0, q.t1)?;
        let std_error = model.std_error(&exposure).unwrap_or(f64::NAN) * (q.t1 - q.t0).abs();
        reports.push(ArmReport {
            name: arm.name.clone(),
            features,
            estimated_effect: estimate,
            std_error,
            cv_r2: cv.mean.r2,
            audit_verdict: audit.verdict,
            sign_agreement: estimate.signum() == truth.signum() && truth != 0.0,
        });
    }
    Ok(FalloutReport {
        format_version: FORMAT_VERSION,
        exposure,
        outcome: q.outcome.clone(),
        effect_kind: q.effect_kind,
        true_ace: truth,
        arms: reports,
    })
}
