//! Causal-analysis toolkit: mixed graphs and d-separation, backdoor
//! adjustment and feature-set auditing, GES structure learning, linear-Gaussian
//! SCM simulation and an OLS-based estimator for effect-estimation
//! experiments.

pub mod adjustment;
pub mod dataset;
pub mod discovery;
pub mod estimator;
pub mod format;
pub mod graph;
pub mod scm;

pub use adjustment::{
    all_sufficient_sets, audit_feature_set, minimal_sufficient_sets, proper_causal_paths, satisfies_backdoor,
    AdjustmentError, AdjustmentSet, AuditReport, CausalQuery, EffectKind, QuerySpec, Verdict,
};
pub use dataset::{Dataset, DatasetError};
pub use discovery::{ges, DiscoveryError, GesConfig};
pub use estimator::{fallout_experiment, kfold_cv, metrics, ols_fit, EstimatorError, FalloutReport, LinearModel, Metrics};
pub use format::{canonical_json, GraphDocument, Role, FORMAT_VERSION};
pub use graph::{d_separated, Edge, GraphError, MixedGraph, NodeSet, Path};
pub use scm::{sample, sample_do, scm_graph, true_ace, ScmError, ScmSpec};

/// Bundled building-energy example: graph, SCM, query and fallout arms.
pub mod presets {
    use crate::adjustment::{CausalQuery, QuerySpec};
    use crate::estimator::ArmsFile;
    use crate::format::GraphDocument;
    use crate::graph::MixedGraph;
    use crate::scm::ScmSpec;

    pub const BUILDING_GRAPH: &str = include_str!("../data/building.graph");
    pub const BUILDING_SCM: &str = include_str!("../data/building_scm.json");
    pub const BUILDING_QUERY: &str = include_str!("../data/building_query.json");
    pub const FALLOUT_ARMS: &str = include_str!("../data/fallout_arms.json");

    pub fn building_document() -> GraphDocument {
        GraphDocument::from_text(BUILDING_GRAPH).expect("bundled graph parses")
    }

    pub fn building_scm() -> ScmSpec {
        ScmSpec::from_json(BUILDING_SCM).expect("bundled SCM is valid")
    }

    pub fn building_query_spec() -> QuerySpec {
        serde_json::from_str(BUILDING_QUERY).expect("bundled query parses")
    }

    pub fn fallout_arms() -> ArmsFile {
        serde_json::from_str(FALLOUT_ARMS).expect("bundled arms parse")
    }

    pub fn building_preset() -> (ScmSpec, MixedGraph, CausalQuery) {
        let spec = building_scm();
        let graph = building_document().graph;
        let query = building_query_spec().resolve(&graph).expect("bundled query resolves");
        (spec, graph, query)
    }
}
