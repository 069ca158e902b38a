//! Score-based structure learning and CPDAG machinery.

mod ges;
mod pdag;
mod score;

pub use ges::{ges, GesConfig};
pub use pdag::{consistent_extension, dag_to_cpdag, meek_closure, shd};
pub use score::{
    bic_graph, bic_local, bic_total, residual_variance, sufficient_stats, LocalScore, SufficientStats,
    SINGULAR_RIDGE, VARIANCE_FLOOR,
};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("node {0} appears among its own parents")]
    NodeInParents(String),
    #[error("need more rows than columns (rows {rows}, columns {columns})")]
    InsufficientRows { rows: usize, columns: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("graph is not a fully directed acyclic graph")]
    NotADag,
    #[error("orientation rules would create a directed cycle")]
    Inconsistent,
    #[error("PDAG admits no consistent extension")]
    NotExtendable,
    #[error("graphs are over different node sets")]
    NodeMismatch,
    #[error("graph node {0} has no matching data column")]
    UnknownColumn(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl DiscoveryError {
    pub fn kind(&self) -> &'static str {
        match self {
            DiscoveryError::NodeInParents(_) => "NodeInParents",
            DiscoveryError::InsufficientRows { .. } => "InsufficientRows",
            DiscoveryError::InvalidConfig(_) => "InvalidConfig",
            DiscoveryError::NotADag => "NotADag",
            DiscoveryError::Inconsistent => "Inconsistent",
            DiscoveryError::NotExtendable => "NotExtendable",
            DiscoveryError::NodeMismatch => "NodeMismatch",
            DiscoveryError::UnknownColumn(_) => "UnknownColumn",
            DiscoveryError::Graph(e) => e.kind(),
        }
    }
}
