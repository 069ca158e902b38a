//! Backdoor adjustment, sufficient/minimal adjustment-set enumeration and the
//! feature-set bias audit.
//!
//! A feature included in a regression model is treated as conditioned: when
//! the exposures are varied at prediction time, included features stay fixed
//! at their test-case values, while omitted features are marginalised over the
//! training distribution.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{GraphDocument, Role, FORMAT_VERSION};
use crate::graph::{d_separated, enumerate_paths, path_open_unchecked, GraphError, Link, MixedGraph, NodeSet, Path};

/// Largest candidate set the brute-force enumeration accepts.
pub const MAX_CANDIDATES: usize = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdjustmentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("query needs at least one exposure")]
    NoExposure,
    #[error("outcome {0} is also an exposure")]
    OutcomeIsExposure(String),
    #[error("{0} is an exposure or the outcome and cannot be a covariate")]
    FeatureIsExposureOrOutcome(String),
    #[error("{0} is not an observed covariate")]
    NotObserved(String),
    #[error("{0} observed candidates exceed the enumeration bound of {MAX_CANDIDATES}")]
    TooManyCandidates(usize),
    #[error("graph document has no outcome role")]
    MissingOutcome,
    #[error("graph document has more than one outcome role")]
    MultipleOutcomes,
}

impl AdjustmentError {
    pub fn kind(&self) -> &'static str {
        match self {
            AdjustmentError::Graph(e) => e.kind(),
            AdjustmentError::NoExposure => "NoExposure",
            AdjustmentError::OutcomeIsExposure(_) => "OutcomeIsExposure",
            AdjustmentError::FeatureIsExposureOrOutcome(_) => "FeatureIsExposureOrOutcome",
            AdjustmentError::NotObserved(_) => "NotObserved",
            AdjustmentError::TooManyCandidates(_) => "TooManyCandidates",
            AdjustmentError::MissingOutcome => "MissingOutcome",
            AdjustmentError::MultipleOutcomes => "MultipleOutcomes",
        }
    }
}

type Result<T> = std::result::Result<T, AdjustmentError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectKind {
    #[default]
    Total,
    Direct,
}

/// Exposures, outcome and candidate covariates over one graph's node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalQuery {
    pub exposures: NodeSet,
    pub outcome: usize,
    pub observed: NodeSet,
    pub effect_kind: EffectKind,
}

impl CausalQuery {
    /// Builds a query; `observed = None` means every other node is observed.
    pub fn new<S: AsRef<str>>(
        g: &MixedGraph,
        exposures: &[S],
        outcome: &str,
        observed: Option<&[S]>,
        effect_kind: EffectKind,
    ) -> Result<Self> {
        let exposures = g.resolve(exposures)?;
        let outcome_ix = g.index_of(outcome)?;
        let observed = match observed {
            Some(o) => g.resolve(o)?,
            None => (0..g.node_count()).collect(),
        };
        Self::from_indices(g, exposures, outcome_ix, observed, effect_kind)
    }

    pub fn from_indices(
        g: &MixedGraph,
        exposures: NodeSet,
        outcome: usize,
        observed: NodeSet,
        effect_kind: EffectKind,
    ) -> Result<Self> {
        if exposures.is_empty() {
            return Err(AdjustmentError::NoExposure);
        }
        if exposures.contains(&outcome) {
            return Err(AdjustmentError::OutcomeIsExposure(g.name(outcome).to_string()));
        }
        let observed = observed.into_iter().filter(|v| *v != outcome && !exposures.contains(v)).collect();
        Ok(CausalQuery { exposures, outcome, observed, effect_kind })
    }

    /// Reads exposures, outcome and unobserved nodes from document roles.
    pub fn from_document(doc: &GraphDocument, effect_kind: EffectKind) -> Result<Self> {
        let g = &doc.graph;
        let exposures = g.resolve(&doc.nodes_with(Role::Exposure))?;
        let outcomes = doc.nodes_with(Role::Outcome);
        let outcome = match outcomes.as_slice() {
            [] => return Err(AdjustmentError::MissingOutcome),
            [o] => g.index_of(o)?,
            _ => return Err(AdjustmentError::MultipleOutcomes),
        };
        let hidden = g.resolve(&doc.nodes_with(Role::Unobserved))?;
        let observed = (0..g.node_count()).filter(|v| !hidden.contains(v)).collect();
        Self::from_indices(g, exposures, outcome, observed, effect_kind)
    }

    /// Candidate covariates in ascending (name) order.
    pub fn candidates(&self) -> Vec<usize> {
        self.observed.iter().copied().collect()
    }
}

/// Name-level query as read from JSON. `t0`/`t1` are the exposure contrast
/// used when estimating effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub format_version: u32,
    pub exposures: Vec<String>,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<Vec<String>>,
    #[serde(default)]
    pub effect_kind: EffectKind,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "one")]
    pub t1: f64,
}

fn one() -> f64 {
    1.0
}

impl QuerySpec {
    pub fn resolve(&self, g: &MixedGraph) -> Result<CausalQuery> {
        CausalQuery::new(g, &self.exposures, &self.outcome, self.observed.as_deref(), self.effect_kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjustmentSet {
    pub members: NodeSet,
    pub minimal: bool,
}

impl AdjustmentSet {
    pub fn names(&self, g: &MixedGraph) -> Vec<String> {
        g.names_of(&self.members)
    }
}

/// Paths from an exposure to the outcome that do not pass through another
/// exposure. Exposures are set by intervention, so an interior exposure ends
/// the path.
fn exposure_outcome_paths(g: &MixedGraph, q: &CausalQuery) -> Vec<Path> {
    let mut out = Vec::new();
    for &x in &q.exposures {
        out.extend(
            enumerate_paths(g, x, q.outcome, g.node_count())
                .into_iter()
                .filter(|p| p.interior().iter().all(|v| !q.exposures.contains(v))),
        );
    }
    out
}

/// All directed paths from any exposure to the outcome.
pub fn proper_causal_paths(g: &MixedGraph, q: &CausalQuery) -> Result<Vec<Path>> {
    g.require_dag()?;
    let mut out = Vec::new();
    for &x in &q.exposures {
        let mut stack = vec![x];
        directed_walk(g, q.outcome, &mut stack, &mut out);
    }
    out.sort();
    Ok(out)
}

fn directed_walk(g: &MixedGraph, target: usize, stack: &mut Vec<usize>, out: &mut Vec<Path>) {
    let v = *stack.last().unwrap();
    for &c in g.children(v) {
        if c == target {
            let mut nodes = stack.clone();
            nodes.push(c);
            out.push(Path { nodes });
        } else {
            stack.push(c);
            directed_walk(g, target, stack, out);
            stack.pop();
        }
    }
}

fn check_subset(g: &MixedGraph, q: &CausalQuery, z: &NodeSet) -> Result<()> {
    for &v in z {
        if v >= g.node_count() {
            return Err(GraphError::UnknownNode(format!("#{v}")).into());
        }
        if q.exposures.contains(&v) || v == q.outcome {
            return Err(AdjustmentError::FeatureIsExposureOrOutcome(g.name(v).to_string()));
        }
        if !q.observed.contains(&v) {
            return Err(AdjustmentError::NotObserved(g.name(v).to_string()));
        }
    }
    Ok(())
}

/// Whether conditioning on `z` identifies the query's effect.
///
/// Total effect, backdoor criterion: `z` holds no descendant of an
/// exposure and d-separates exposures from the outcome once every edge out of
/// an exposure is removed.
///
/// Direct effect, single-door criterion: `z` holds no descendant of the
/// outcome and d-separates exposures from the outcome once the
/// exposure→outcome edges are removed.
pub fn satisfies_backdoor(g: &MixedGraph, q: &CausalQuery, z: &NodeSet) -> Result<bool> {
    g.require_dag()?;
    check_subset(g, q, z)?;
    let mutilated = SurgeryCache::new(g, q);
    Ok(mutilated.admissible(z))
}

/// The mutilated graph and forbidden set for a query, computed once and reused
/// across the subsets of an enumeration.
struct SurgeryCache {
    graph: MixedGraph,
    forbidden: NodeSet,
    ys: NodeSet,
    xs: NodeSet,
}

impl SurgeryCache {
    fn new(g: &MixedGraph, q: &CausalQuery) -> Self {
        let (graph, forbidden) = match q.effect_kind {
            EffectKind::Total => {
                let mut forbidden = NodeSet::new();
                for &x in &q.exposures {
                    forbidden.extend(g.descendants(x));
                }
                (g.without_edges(|a, _| q.exposures.contains(&a)), forbidden)
            }
            EffectKind::Direct => {
                let mut forbidden = g.descendants(q.outcome);
                forbidden.insert(q.outcome);
                (g.without_edges(|a, b| q.exposures.contains(&a) && b == q.outcome), forbidden)
            }
        };
        SurgeryCache { graph, forbidden, ys: NodeSet::from([q.outcome]), xs: q.exposures.clone() }
    }

    fn admissible(&self, z: &NodeSet) -> bool {
        z.is_disjoint(&self.forbidden)
            && d_separated(&self.graph, &self.xs, &self.ys, z).expect("validated query on a DAG")
    }
}

fn enumerate(g: &MixedGraph, q: &CausalQuery) -> Result<Vec<u32>> {
    g.require_dag()?;
    let cands = q.candidates();
    if cands.len() > MAX_CANDIDATES {
        return Err(AdjustmentError::TooManyCandidates(cands.len()));
    }
    let cache = SurgeryCache::new(g, q);
    let mut masks: Vec<u32> = (0u32..(1u32 << cands.len()))
        .filter(|&m| cache.admissible(&mask_to_set(&cands, m)))
        .collect();
    masks.sort_by(|a, b| {
        a.count_ones()
            .cmp(&b.count_ones())
            .then_with(|| mask_to_set(&cands, *a).into_iter().cmp(mask_to_set(&cands, *b)))
    });
    Ok(masks)
}

fn mask_to_set(cands: &[usize], mask: u32) -> NodeSet {
    cands.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect()
}

/// Every sufficient subset of the observed covariates, by size then
/// lexicographically.
pub fn all_sufficient_sets(g: &MixedGraph, q: &CausalQuery) -> Result<Vec<AdjustmentSet>> {
    let cands = q.candidates();
    let masks = enumerate(g, q)?;
    let minimal = minimal_masks(&masks);
    Ok(masks
        .iter()
        .map(|&m| AdjustmentSet { members: mask_to_set(&cands, m), minimal: minimal.contains(&m) })
        .collect())
}

/// Inclusion-minimal sufficient sets.
pub fn minimal_sufficient_sets(g: &MixedGraph, q: &CausalQuery) -> Result<Vec<AdjustmentSet>> {
    let cands = q.candidates();
    let masks = enumerate(g, q)?;
    let minimal = minimal_masks(&masks);
    Ok(masks
        .iter()
        .filter(|m| minimal.contains(m))
        .map(|&m| AdjustmentSet { members: mask_to_set(&cands, m), minimal: true })
        .collect())
}

fn minimal_masks(sorted_by_size: &[u32]) -> BTreeSet<u32> {
    let mut minimal: Vec<u32> = Vec::new();
    for &m in sorted_by_size {
        if !minimal.iter().any(|&s| s & m == s) {
            minimal.push(m);
        }
    }
    minimal.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Unbiased,
    Biased,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Unbiased => "unbiased",
            Verdict::Biased => "biased",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub verdict: Verdict,
    pub open_biasing_paths: Vec<Path>,
    pub blocked_causal_paths: Vec<Path>,
    pub conditioned_colliders: Vec<usize>,
    pub suggestions: Vec<(EditAction, usize)>,
    pub minimal_sets: Vec<AdjustmentSet>,
}

struct PathFindings {
    open_biasing: Vec<Path>,
    blocked_causal: Vec<Path>,
    colliders: NodeSet,
}

impl PathFindings {
    fn verdict(&self) -> Verdict {
        if self.open_biasing.is_empty() && self.blocked_causal.is_empty() {
            Verdict::Unbiased
        } else {
            Verdict::Biased
        }
    }
}

fn inspect(g: &MixedGraph, q: &CausalQuery, paths: &[Path], z: &NodeSet) -> PathFindings {
    let mut open_biasing = Vec::new();
    let mut blocked_causal = Vec::new();
    let mut colliders = NodeSet::new();
    let activated = g.ancestors_of_set(z);
    for p in paths {
        for c in p.colliders(g) {
            if activated.contains(&c) {
                colliders.insert(c);
            }
        }
        let open = path_open_unchecked(g, p, z);
        let causal = match q.effect_kind {
            EffectKind::Total => p.is_directed(g),
            EffectKind::Direct => p.len() == 1 && g.link(p.start(), p.end()) == Some(Link::Out),
        };
        if causal {
            if !open {
                blocked_causal.push(p.clone());
            }
        } else if open {
            open_biasing.push(p.clone());
        }
    }
    open_biasing.sort();
    blocked_causal.sort();
    PathFindings { open_biasing, blocked_causal, colliders }
}

/// Audits a regression feature set for structural bias in the exposure effect.
pub fn audit_feature_set(g: &MixedGraph, q: &CausalQuery, features: &NodeSet) -> Result<AuditReport> {
    g.require_dag()?;
    check_subset(g, q, features)?;
    let paths = exposure_outcome_paths(g, q);
    let findings = inspect(g, q, &paths, features);
    let verdict = findings.verdict();

    let mut suggestions = Vec::new();
    if verdict == Verdict::Biased {
        for &v in &q.observed {
            let mut z = features.clone();
            let action = if z.remove(&v) {
                EditAction::Remove
            } else {
                z.insert(v);
                EditAction::Add
            };
            if inspect(g, q, &paths, &z).verdict() == Verdict::Unbiased {
                suggestions.push((action, v));
            }
        }
        suggestions.sort();
    }

    Ok(AuditReport {
        verdict,
        open_biasing_paths: findings.open_biasing,
        blocked_causal_paths: findings.blocked_causal,
        conditioned_colliders: findings.colliders.into_iter().collect(),
        suggestions,
        minimal_sets: minimal_sufficient_sets(g, q)?,
    })
}

/// JSON form of an [`AuditReport`]; paths become node-name arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReportJson {
    pub format_version: u32,
    pub verdict: Verdict,
    pub open_biasing_paths: Vec<Vec<String>>,
    pub blocked_causal_paths: Vec<Vec<String>>,
    pub conditioned_colliders: Vec<String>,
    pub suggestions: Vec<SuggestionJson>,
    pub minimal_sets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionJson {
    pub action: EditAction,
    pub node: String,
}

impl AuditReport {
    pub fn to_json(&self, g: &MixedGraph) -> AuditReportJson {
        AuditReportJson {
            format_version: FORMAT_VERSION,
            verdict: self.verdict,
            open_biasing_paths: self.open_biasing_paths.iter().map(|p| p.names(g)).collect(),
            blocked_causal_paths: self.blocked_causal_paths.iter().map(|p| p.names(g)).collect(),
            conditioned_colliders: g.names_of(&self.conditioned_colliders),
            suggestions: self
                .suggestions
                .iter()
                .map(|&(action, v)| SuggestionJson { action, node: g.name(v).to_string() })
                .collect(),
            minimal_sets: self.minimal_sets.iter().map(|s| s.names(g)).collect(),
        }
    }
}
