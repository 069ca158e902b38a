//! Decomposable Gaussian BIC over maximum-likelihood sufficient statistics.

use nalgebra::{DMatrix, DVector};

use super::DiscoveryError;
use crate::dataset::Dataset;
use crate::graph::MixedGraph;

/// Residual variances below this are clamped before taking the log.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Diagonal ridge applied when the parent covariance is singular.
pub const SINGULAR_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub n: usize,
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// MLE covariance (divides by n).
    pub cov: DMatrix<f64>,
    /// Columns with zero variance.
    pub degenerate: Vec<usize>,
}

impl SufficientStats {
    pub fn column_count(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)] / (self.cov[(i, i)] * self.cov[(j, j)]).sqrt()
    }
}

pub fn sufficient_stats(d: &Dataset) -> SufficientStats {
    let n = d.row_count();
    let p = d.column_count();
    let means: Vec<f64> = (0..p).map(|j| d.column_at(j).iter().sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> =
        (0..p).map(|j| d.column_at(j).iter().map(|v| v - means[j]).collect()).collect();
    let mut cov = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let s: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            cov[(i, j)] = s / n as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let degenerate: Vec<usize> = (0..p).filter(|&j| cov[(j, j)] == 0.0).collect();
    for &j in &degenerate {
        tracing::warn!(column = %d.names()[j], "zero-variance column");
    }
    SufficientStats { n, names: d.names().to_vec(), means, cov, degenerate }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalScore {
    pub value: f64,
    /// The parent covariance was singular and solved with a ridge.
    pub ridged: bool,
}

/// MLE residual variance of `node` regressed on `parents`, floored at
/// [`VARIANCE_FLOOR`].
pub fn residual_variance(s: &SufficientStats, node: usize, parents: &[usize]) -> (f64, bool) {
    let syy = s.cov[(node, node)];
    if parents.is_empty() {
        return (syy.max(VARIANCE_FLOOR), false);
    }
    let k = parents.len();
    let spp = DMatrix::from_fn(k, k, |a, b| s.cov[(parents[a], parents[b])]);
    let spy = DVector::from_fn(k, |a, _| s.cov[(parents[a], node)]);
    let (explained, ridged) = match well_conditioned_cholesky(&spp) {
        Some(ch) => {
            let w = ch.l().solve_lower_triangular(&spy).expect("triangular factor is nonsingular");
            (w.dot(&w), false)
        }
        None => {
            let mut r = spp.clone();
            for a in 0..k {
                r[(a, a)] += SINGULAR_RIDGE;
            }
            let beta = r.cholesky().map(|c| c.solve(&spy)).unwrap_or_else(|| DVector::zeros(k));
            (beta.dot(&spy), true)
        }
    };
    ((syy - explained).max(VARIANCE_FLOOR), ridged)
}

fn well_conditioned_cholesky(m: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let ch = m.clone().cholesky()?;
    let l = ch.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let d = m[(i, i)];
        d > 0.0 && l[(i, i)] * l[(i, i)] > 1e-12 * d
    });
    ok.then_some(ch)
}

/// Local BIC: `-(n/2)·ln σ̂² − penalty·((|parents|+1)/2)·ln n`.
pub fn bic_local(
    s: &SufficientStats,
    node: usize,
    parents: &[usize],
    penalty: f64,
) -> Result<LocalScore, DiscoveryError> {
    if parents.contains(&node) {
        return Err(DiscoveryError::NodeInParents(s.names[node].clone()));
    }
    let (var, ridged) = residual_variance(s, node, parents);
    if ridged {
        tracing::debug!(node = %s.names[node], "singular parent covariance, ridge applied");
    }
    let n = s.n as f64;
    let value = -0.5 * n * var.ln() - penalty * (parents.len() as f64 + 1.0) / 2.0 * n.ln();
    Ok(LocalScore { value, ridged })
}

/// Total BIC of a DAG given as parent lists over stats columns.
pub fn bic_total(s: &SufficientStats, parents: &[Vec<usize>], penalty: f64) -> Result<f64, DiscoveryError> {
    parents.iter().enumerate().map(|(v, pa)| bic_local(s, v, pa, penalty).map(|l| l.value)).sum()
}

/// Total BIC of a DAG whose node names match stats columns.
pub fn bic_graph(s: &SufficientStats, g: &MixedGraph, penalty: f64) -> Result<f64, DiscoveryError> {
    g.require_dag()?;
    let col = |name: &str| s.index_of(name).ok_or_else(|| DiscoveryError::UnknownColumn(name.to_string()));
    let mut parents = vec![Vec::new(); s.column_count()];
    for v in 0..g.node_count() {
        let c = col(g.name(v))?;
        parents[c] = g.parents(v).iter().map(|&p| col(g.name(p))).collect::<Result<_, _>>()?;
    }
    bic_total(s, &parents, penalty)
}
