//! Graph interchange formats.
//!
//! Text format, one declaration per line, `#` starts a comment:
//!
//! ```text
//! node InsulationStandard @exposure
//! node EUIHeating @outcome
//! edge InsulationStandard -> EUIHeating
//! edge Area -- NumberOfFloors
//! ```
//!
//! The JSON form carries the same content plus `format_version`. Both
//! serializers emit canonical output (nodes by name, edges by tail then head),
//! so save→load→save is byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{valid_name, Edge, EdgeKind, GraphError, MixedGraph};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Exposure,
    Outcome,
    Adjusted,
    Unobserved,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Exposure => "exposure",
            Role::Outcome => "outcome",
            Role::Adjusted => "adjusted",
            Role::Unobserved => "unobserved",
        }
    }

    fn parse(s: &str) -> Option<Role> {
        Some(match s {
            "exposure" => Role::Exposure,
            "outcome" => Role::Outcome,
            "adjusted" => Role::Adjusted,
            "unobserved" => Role::Unobserved,
            _ => return None,
        })
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0}")]
    Version(u32),
    #[error("conflicting roles for node {0}")]
    ConflictingRole(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl FormatError {
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Syntax { .. } => "Syntax",
            FormatError::Json(_) => "Json",
            FormatError::Version(_) => "Version",
            FormatError::ConflictingRole(_) => "ConflictingRole",
            FormatError::Graph(e) => e.kind(),
        }
    }
}

/// A graph plus the role annotations attached to its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDocument {
    pub graph: MixedGraph,
    pub roles: BTreeMap<String, Role>,
}

impl GraphDocument {
    pub fn new(graph: MixedGraph) -> Self {
        GraphDocument { graph, roles: BTreeMap::new() }
    }

    pub fn with_roles(graph: MixedGraph, roles: BTreeMap<String, Role>) -> Result<Self, GraphError> {
        for name in roles.keys() {
            graph.index_of(name)?;
        }
        Ok(GraphDocument { graph, roles })
    }

    pub fn nodes_with(&self, role: Role) -> Vec<String> {
        self.roles.iter().filter(|(_, r)| **r == role).map(|(n, _)| n.clone()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for name in self.graph.names() {
            match self.roles.get(name) {
                Some(r) => writeln!(out, "node {} @{}", name, r.as_str()),
                None => writeln!(out, "node {}", name),
            }
            .unwrap();
        }
        for e in self.graph.edges() {
            writeln!(out, "edge {}", e).unwrap();
        }
        out
    }

    pub fn from_text(src: &str) -> Result<Self, FormatError> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut roles = BTreeMap::new();
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: &str| FormatError::Syntax { line: line_no, msg: msg.to_string() };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["node", name, rest @ ..] => {
                    if !valid_name(name) {
                        return Err(err(&format!("invalid node name {name:?}")));
                    }
                    nodes.push(name.to_string());
                    match rest {
                        [] => {}
                        [tag] => {
                            let role = tag
                                .strip_prefix('@')
                                .and_then(Role::parse)
                                .ok_or_else(|| err(&format!("unknown role {tag}")))?;
                            if let Some(prev) = roles.insert(name.to_string(), role) {
                                if prev != role {
                                    return Err(FormatError::ConflictingRole(name.to_string()));
                                }
                            }
                        }
                        _ => return Err(err("expected `node <name> [@role]`")),
                    }
                }
                ["edge", a, arrow, b] => {
                    let kind = match *arrow {
                        "->" => EdgeKind::Directed,
                        "--" => EdgeKind::Undirected,
                        other => return Err(err(&format!("unknown edge marker {other}"))),
                    };
                    edges.push(Edge { tail: a.to_string(), head: b.to_string(), kind });
                }
                _ => return Err(err("expected `node ...` or `edge <a> -> <b>`")),
            }
        }
        let graph = MixedGraph::new(&nodes, edges)?;
        Ok(GraphDocument { graph, roles })
    }

    pub fn to_json_value(&self) -> GraphJson {
        GraphJson {
            format_version: FORMAT_VERSION,
            nodes: self
                .graph
                .names()
                .iter()
                .map(|n| NodeJson { name: n.clone(), role: self.roles.get(n).copied() })
                .collect(),
            edges: self.graph.edges(),
        }
    }

    /// Canonical JSON: sorted keys, no insignificant whitespace.
    pub fn to_json(&self) -> String {
        canonical_json(&self.to_json_value())
    }

    pub fn from_json(src: &str) -> Result<Self, FormatError> {
        let doc: GraphJson = serde_json::from_str(src)?;
        doc.into_document()
    }

    /// Parses either format, picking JSON when the first non-blank character is `{`.
    pub fn parse_any(src: &str) -> Result<Self, FormatError> {
        if src.trim_start().starts_with('{') {
            Self::from_json(src)
        } else {
            Self::from_text(src)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub format_version: u32,
    pub nodes: Vec<NodeJson>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl GraphJson {
    pub fn into_document(self) -> Result<GraphDocument, FormatError> {
        if self.format_version != FORMAT_VERSION {
            return Err(FormatError::Version(self.format_version));
        }
        let mut roles = BTreeMap::new();
        for n in &self.nodes {
            if let Some(r) = n.role {
                if let Some(prev) = roles.insert(n.name.clone(), r) {
                    if prev != r {
                        return Err(FormatError::ConflictingRole(n.name.clone()));
                    }
                }
            }
        }
        let graph = MixedGraph::new(self.nodes.iter().map(|n| n.name.as_str()), self.edges)?;
        Ok(GraphDocument { graph, roles })
    }
}

/// Serializes through `serde_json::Value`, whose object map is ordered, giving
/// sorted keys and compact separators.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable payload");
    serde_json::to_string(&v).expect("value serializes")
}
