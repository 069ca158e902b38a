//! Linear-Gaussian structural causal models: specification, ancestral
//! sampling, do-interventions and analytic effects.
//!
//! Sampling uses ChaCha8 seeded from a `u64` and inverse-CDF normal variates:
//! each uniform is `((x >> 11) + 0.5) / 2^53` for the next 64-bit output `x`.
//! Draws are consumed row by row, one per variable in specification order,
//! including for intervened variables, so `sample` and `sample_do` with the
//! same seed share noise for every non-intervened variable.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::format::FORMAT_VERSION;
use crate::graph::{Edge, MixedGraph};

#[derive(Debug, Error)]
pub enum ScmError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("invalid SCM: {0}")]
    InvalidSpec(String),
    #[error("invalid SCM JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl ScmError {
    pub fn kind(&self) -> &'static str {
        match self {
            ScmError::UnknownVariable(_) => "UnknownVariable",
            ScmError::InvalidSpec(_) => "InvalidSpec",
            ScmError::Json(_) => "Json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmVariable {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub intercept: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    pub format_version: u32,
    pub variables: Vec<ScmVariable>,
    /// Optional clamp ranges, applied only when sampling with clamping on.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ranges: BTreeMap<String, (f64, f64)>,
}

/// Variable → constant assignments.
pub type InterventionSpec = BTreeMap<String, f64>;

impl ScmSpec {
    pub fn from_json(src: &str) -> Result<Self, ScmError> {
        let spec: ScmSpec = serde_json::from_str(src)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ScmError> {
        let bad = |m: String| Err(ScmError::InvalidSpec(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("unsupported format_version {}", self.format_version));
        }
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !crate::graph::valid_name(&v.name) {
                return bad(format!("invalid variable name {:?}", v.name));
            }
            if v.parents.len() != v.coefficients.len() {
                return bad(format!("{}: {} parents but {} coefficients", v.name, v.parents.len(), v.coefficients.len()));
            }
            if !(v.noise_std >= 0.0 && v.noise_std.is_finite()) || !v.intercept.is_finite() {
                return bad(format!("{}: intercept and noise_std must be finite, noise_std >= 0", v.name));
            }
            if v.coefficients.iter().any(|c| !c.is_finite()) {
                return bad(format!("{}: non-finite coefficient", v.name));
            }
            let mut own = HashSet::new();
            for p in &v.parents {
                if !seen.contains(p.as_str()) {
                    return bad(format!("{}: parent {} must be declared earlier", v.name, p));
                }
                if !own.insert(p.as_str()) {
                    return bad(format!("{}: parent {} listed twice", v.name, p));
                }
            }
            if !seen.insert(v.name.as_str()) {
                return bad(format!("duplicate variable {}", v.name));
            }
        }
        for (name, (lo, hi)) in &self.ranges {
            if !seen.contains(name.as_str()) {
                return Err(ScmError::UnknownVariable(name.clone()));
            }
            if !(lo <= hi) {
                return bad(format!("range of {name} is empty"));
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize, ScmError> {
        self.variables.iter().position(|v| v.name == name).ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub fn to_json(&self) -> String {
        crate::format::canonical_json(self)
    }
}

/// The DAG implied by the parent lists.
pub fn scm_graph(spec: &ScmSpec) -> MixedGraph {
    let edges = spec
        .variables
        .iter()
        .flat_map(|v| v.parents.iter().map(move |p| Edge::directed(p.clone(), v.name.clone())));
    MixedGraph::new(spec.names(), edges).expect("validated spec forms a DAG")
}

fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn sample(spec: &ScmSpec, n: usize, seed: u64) -> Dataset {
    sample_inner(spec, &HashMap::new(), n, seed, false)
}

/// Sampling with clamping to `ranges` after the noise is added.
pub fn sample_clamped(spec: &ScmSpec, n: usize, seed: u64) -> Dataset {
    sample_inner(spec, &HashMap::new(), n, seed, true)
}

pub fn sample_do(spec: &ScmSpec, iv: &InterventionSpec, n: usize, seed: u64) -> Result<Dataset, ScmError> {
    let mut fixed = HashMap::new();
    for (name, &value) in iv {
        fixed.insert(spec.position(name)?, value);
    }
    Ok(sample_inner(spec, &fixed, n, seed, false))
}

fn sample_inner(spec: &ScmSpec, fixed: &HashMap<usize, f64>, n: usize, seed: u64, clamp: bool) -> Dataset {
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parent_ix: Vec<Vec<usize>> = spec
        .variables
        .iter()
        .map(|v| v.parents.iter().map(|p| spec.position(p).expect("validated parent")).collect())
        .collect();
    let bounds: Vec<Option<(f64, f64)>> =
        spec.variables.iter().map(|v| if clamp { spec.ranges.get(&v.name).copied() } else { None }).collect();
    let p = spec.variables.len();
    let mut cols = vec![Vec::with_capacity(n); p];
    let mut row = vec![0.0; p];
    for _ in 0..n {
        for (j, var) in spec.variables.iter().enumerate() {
            let z = std_normal.inverse_cdf(uniform_open(&mut rng));
            let mut value = match fixed.get(&j) {
                Some(&c) => c,
                None => {
                    var.intercept
                        + parent_ix[j].iter().zip(&var.coefficients).map(|(&k, c)| c * row[k]).sum::<f64>()
                        + var.noise_std * z
                }
            };
            if let (Some((lo, hi)), false) = (bounds[j], fixed.contains_key(&j)) {
                value = value.clamp(lo, hi);
            }
            row[j] = value;
            cols[j].push(value);
        }
    }
    Dataset::new(spec.names().into_iter().zip(cols).collect()).expect("sampled columns are well-formed")
}

/// Total-effect weights of `exposure` on every variable (path-coefficient sums).
fn total_effects(spec: &ScmSpec, exposure: usize) -> Vec<f64> {
    let mut eff = vec![0.0; spec.variables.len()];
    eff[exposure] = 1.0;
    for (j, v) in spec.variables.iter().enumerate().skip(exposure + 1) {
        eff[j] = v
            .parents
            .iter()
            .zip(&v.coefficients)
            .map(|(p, c)| c * eff[spec.position(p).expect("validated parent")])
            .sum();
    }
    eff
}

/// Average causal effect E[outcome | do(exposure=t1)] − E[outcome | do(exposure=t0)]:
/// `(t1 − t0)` times the sum over directed paths of coefficient products.
pub fn true_ace(spec: &ScmSpec, exposure: &str, t1: f64, t0: f64, outcome: &str) -> Result<f64, ScmError> {
    let (x, y) = (spec.position(exposure)?, spec.position(outcome)?);
    if x == y {
        return Err(ScmError::InvalidSpec("exposure and outcome coincide".into()));
    }
    Ok((t1 - t0) * total_effects(spec, x)[y])
}

/// Controlled direct effect: `(t1 − t0)` times the exposure→outcome edge
/// coefficient, zero when there is no such edge.
pub fn true_direct_effect(spec: &ScmSpec, exposure: &str, t1: f64, t0: f64, outcome: &str) -> Result<f64, ScmError> {
    let (x, y) = (spec.position(exposure)?, spec.position(outcome)?);
    if x == y {
        return Err(ScmError::InvalidSpec("exposure and outcome coincide".into()));
    }
    let v = &spec.variables[y];
    let coef = v.parents.iter().position(|p| p == exposure).map_or(0.0, |i| v.coefficients[i]);
    Ok((t1 - t0) * coef)
}
