//! Request/response types and operations shared by the command line and the
//! HTTP service. Both surfaces call these functions and render the result
//! with [`render`], so identical inputs give byte-identical payloads.

use std::fmt;

use causal_audit::adjustment::{
    all_sufficient_sets, audit_feature_set, minimal_sufficient_sets, AdjustmentError, CausalQuery, EffectKind,
    QuerySpec,
};
use causal_audit::dataset::{Dataset, DatasetError, OrdinalEncoding};
use causal_audit::discovery::{ges, DiscoveryError, GesConfig};
use causal_audit::estimator::{fallout_experiment, Arm, EstimatorError, FalloutReport};
use causal_audit::format::{canonical_json, FormatError, GraphDocument, Role, FORMAT_VERSION};
use causal_audit::graph::{d_separated, GraphError, NodeSet};
use causal_audit::scm::{ScmError, ScmSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// How a failure maps onto exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Unparseable request body or input file.
    Malformed,
    /// Named graph not in the store.
    NotFound,
    /// Well-formed input that violates a domain rule.
    Domain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub class: ErrorClass,
    pub error: String,
    pub detail: String,
}

impl ApiError {
    pub fn new(class: ErrorClass, error: impl Into<String>, detail: impl Into<String>) -> Self {
        ApiError { class, error: error.into(), detail: detail.into() }
    }

    pub fn malformed(detail: impl fmt::Display) -> Self {
        ApiError::new(ErrorClass::Malformed, "MalformedInput", detail.to_string())
    }

    pub fn payload(&self) -> Value {
        json!({ "format_version": FORMAT_VERSION, "error": self.error, "detail": self.detail })
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.error, self.detail)
    }
}

impl std::error::Error for ApiError {}

macro_rules! domain_error {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                ApiError::new(ErrorClass::Domain, e.kind(), e.to_string())
            }
        }
    )*};
}

domain_error!(GraphError, FormatError, AdjustmentError, DiscoveryError, DatasetError, ScmError, EstimatorError);

pub type ApiResult<T> = Result<T, ApiError>;

/// Canonical JSON: sorted keys, compact separators.
pub fn render<T: Serialize>(value: &T) -> String {
    canonical_json(value)
}

pub fn parse_json<T: serde::de::DeserializeOwned>(src: &str) -> ApiResult<T> {
    serde_json::from_str(src).map_err(ApiError::malformed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsepRequest {
    pub x: Vec<String>,
    pub y: Vec<String>,
    #[serde(default)]
    pub given: Vec<String>,
}

/// Exposures and outcome fall back to the graph's role annotations when
/// omitted; `observed` defaults to every node not marked unobserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryFields {
    pub exposures: Vec<String>,
    pub outcome: Option<String>,
    pub observed: Option<Vec<String>>,
    pub effect_kind: EffectKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustmentRequest {
    #[serde(default)]
    pub exposures: Vec<String>,
    #[serde(default)]
    pub outcome: Option<String>,
    #[serde(default)]
    pub observed: Option<Vec<String>>,
    #[serde(default)]
    pub effect_kind: EffectKind,
    #[serde(default)]
    pub minimal: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRequest {
    #[serde(default)]
    pub exposures: Vec<String>,
    #[serde(default)]
    pub outcome: Option<String>,
    #[serde(default)]
    pub observed: Option<Vec<String>>,
    #[serde(default)]
    pub effect_kind: EffectKind,
    #[serde(default)]
    pub features: Vec<String>,
}

impl AdjustmentRequest {
    pub fn query(&self) -> QueryFields {
        QueryFields {
            exposures: self.exposures.clone(),
            outcome: self.outcome.clone(),
            observed: self.observed.clone(),
            effect_kind: self.effect_kind,
        }
    }
}

impl AuditRequest {
    pub fn query(&self) -> QueryFields {
        QueryFields {
            exposures: self.exposures.clone(),
            outcome: self.outcome.clone(),
            observed: self.observed.clone(),
            effect_kind: self.effect_kind,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscoverOptions {
    #[serde(default)]
    pub penalty: Option<f64>,
    #[serde(default)]
    pub encoding: Option<OrdinalEncoding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalloutRequest {
    pub scm: ScmSpec,
    pub query: QuerySpec,
    pub arms: Vec<Arm>,
    pub n: usize,
    pub seed: u64,
}

pub fn health() -> Value {
    json!({ "format_version": FORMAT_VERSION, "status": "ok" })
}

/// Parses a graph in either the text or the JSON format.
pub fn parse_graph(src: &str) -> ApiResult<GraphDocument> {
    GraphDocument::parse_any(src).map_err(|e| match e {
        FormatError::Syntax { .. } | FormatError::Json(_) => ApiError::new(ErrorClass::Malformed, e.kind(), e.to_string()),
        other => other.into(),
    })
}

/// Structural summary of a graph document.
pub fn graph_check(doc: &GraphDocument) -> Value {
    let g = &doc.graph;
    json!({
        "format_version": FORMAT_VERSION,
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "undirected_edges": g.undirected_pairs().len(),
        "acyclic": g.is_acyclic(),
        "topological_order": g.topological_order().map(|o| g.names_of(&o)),
        "roles": doc.roles,
    })
}

pub fn dsep(doc: &GraphDocument, req: &DsepRequest) -> ApiResult<Value> {
    let g = &doc.graph;
    let separated = d_separated(g, &g.resolve(&req.x)?, &g.resolve(&req.y)?, &g.resolve(&req.given)?)?;
    Ok(json!({ "format_version": FORMAT_VERSION, "d_separated": separated }))
}

pub fn build_query(doc: &GraphDocument, f: &QueryFields) -> ApiResult<CausalQuery> {
    let g = &doc.graph;
    let exposures = if f.exposures.is_empty() { doc.nodes_with(Role::Exposure) } else { f.exposures.clone() };
    let outcome = match &f.outcome {
        Some(o) => o.clone(),
        None => match doc.nodes_with(Role::Outcome).as_slice() {
            [] => return Err(AdjustmentError::MissingOutcome.into()),
            [o] => o.clone(),
            _ => return Err(AdjustmentError::MultipleOutcomes.into()),
        },
    };
    let observed: NodeSet = match &f.observed {
        Some(o) => g.resolve(o)?,
        None => {
            let hidden = g.resolve(&doc.nodes_with(Role::Unobserved))?;
            (0..g.node_count()).filter(|v| !hidden.contains(v)).collect()
        }
    };
    Ok(CausalQuery::from_indices(g, g.resolve(&exposures)?, g.index_of(&outcome)?, observed, f.effect_kind)?)
}

pub fn adjustment_sets(doc: &GraphDocument, req: &AdjustmentRequest) -> ApiResult<Value> {
    let g = &doc.graph;
    let q = build_query(doc, &req.query())?;
    let sets = if req.minimal { minimal_sufficient_sets(g, &q)? } else { all_sufficient_sets(g, &q)? };
    let sets: Vec<Vec<String>> = sets.iter().map(|s| s.names(g)).collect();
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "effect_kind": q.effect_kind,
        "minimal": req.minimal,
        "sets": sets,
    }))
}

pub fn audit(doc: &GraphDocument, req: &AuditRequest) -> ApiResult<Value> {
    let g = &doc.graph;
    let q = build_query(doc, &req.query())?;
    let features = g.resolve(&req.features)?;
    let report = audit_feature_set(g, &q, &features)?;
    Ok(serde_json::to_value(report.to_json(g)).expect("serializable report"))
}

pub fn discover(csv: &str, opts: &DiscoverOptions) -> ApiResult<GraphDocument> {
    let data = Dataset::from_csv_str(csv, opts.encoding.as_ref())?;
    let mut cfg = GesConfig::default();
    if let Some(p) = opts.penalty {
        cfg.penalty_multiplier = p;
    }
    Ok(GraphDocument::new(ges(&data, &cfg)?))
}

pub fn fallout(req: &FalloutRequest) -> ApiResult<FalloutReport> {
    req.scm.validate()?;
    Ok(fallout_experiment(&req.scm, &req.query, &req.arms, req.n, req.seed)?)
}
