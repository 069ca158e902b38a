//! Mixed directed/undirected graphs and the path semantics built on them.
//!
//! Nodes are stored in byte-lexicographic order of their names, so a node's
//! index doubles as its rank in every deterministic ordering used by the crate
//! (path lists, tie-breaks in discovery, serialized output).

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Set of node indices. Ordered so iteration is deterministic.
pub type NodeSet = BTreeSet<usize>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid node name {0:?}")]
    InvalidName(String),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("more than one edge between {0} and {1}")]
    DuplicateEdge(String, String),
    #[error("edge endpoint {0} is not a declared node")]
    UnknownEndpoint(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("graph has undirected edges; a fully directed graph is required")]
    UndirectedEdges,
    #[error("path endpoint {0} is in the conditioning set")]
    EndpointConditioned(String),
    #[error("node sets overlap at {0}")]
    OverlappingSets(String),
    #[error("not a valid path: {0}")]
    InvalidPath(String),
}

impl GraphError {
    /// Stable variant name, used in structured error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            GraphError::InvalidName(_) => "InvalidName",
            GraphError::SelfLoop(_) => "SelfLoop",
            GraphError::DuplicateEdge(..) => "DuplicateEdge",
            GraphError::UnknownEndpoint(_) => "UnknownEndpoint",
            GraphError::UnknownNode(_) => "UnknownNode",
            GraphError::Cyclic => "Cyclic",
            GraphError::UndirectedEdges => "UndirectedEdges",
            GraphError::EndpointConditioned(_) => "EndpointConditioned",
            GraphError::OverlappingSets(_) => "OverlappingSets",
            GraphError::InvalidPath(_) => "InvalidPath",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Directed,
    Undirected,
}

/// An edge given by endpoint names. For undirected edges the order of
/// `tail` and `head` carries no meaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub tail: String,
    pub head: String,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn directed(tail: impl Into<String>, head: impl Into<String>) -> Self {
        Edge { tail: tail.into(), head: head.into(), kind: EdgeKind::Directed }
    }

    pub fn undirected(a: impl Into<String>, b: impl Into<String>) -> Self {
        Edge { tail: a.into(), head: b.into(), kind: EdgeKind::Undirected }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EdgeKind::Directed => write!(f, "{} -> {}", self.tail, self.head),
            EdgeKind::Undirected => write!(f, "{} -- {}", self.tail, self.head),
        }
    }
}

/// How two nodes are joined, seen from the first node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// `a -> b`
    Out,
    /// `a <- b`
    In,
    /// `a -- b`
    Undirected,
}

pub fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(char::is_whitespace) && !name.starts_with('@') && !name.starts_with('#')
}

/// Node/edge store for DAGs, PDAGs and CPDAGs. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl MixedGraph {
    /// Builds and validates a graph. Repeated node names collapse to one node.
    pub fn new<I, S>(nodes: I, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for n in nodes {
            let n = n.as_ref();
            if !valid_name(n) {
                return Err(GraphError::InvalidName(n.to_string()));
            }
            set.insert(n.to_string());
        }
        let names: Vec<String> = set.into_iter().collect();
        let index: HashMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let n = names.len();
        let mut g = MixedGraph {
            names,
            index,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
            neighbors: vec![Vec::new(); n],
        };
        let mut seen = BTreeSet::new();
        for e in edges {
            let a = *g.index.get(&e.tail).ok_or_else(|| GraphError::UnknownEndpoint(e.tail.clone()))?;
            let b = *g.index.get(&e.head).ok_or_else(|| GraphError::UnknownEndpoint(e.head.clone()))?;
            if a == b {
                return Err(GraphError::SelfLoop(e.tail));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                let (lo, hi) = (a.min(b), a.max(b));
                return Err(GraphError::DuplicateEdge(g.names[lo].clone(), g.names[hi].clone()));
            }
            match e.kind {
                EdgeKind::Directed => {
                    g.children[a].push(b);
                    g.parents[b].push(a);
                }
                EdgeKind::Undirected => {
                    g.neighbors[a].push(b);
                    g.neighbors[b].push(a);
                }
            }
        }
        for v in g.parents.iter_mut().chain(g.children.iter_mut()).chain(g.neighbors.iter_mut()) {
            v.sort_unstable();
        }
        Ok(g)
    }

    /// Builds a graph from index-level adjacency. `directed` holds `(tail, head)`
    /// pairs, `undirected` unordered pairs; both must already be valid.
    pub(crate) fn from_indexed(
        names: Vec<String>,
        directed: &[(usize, usize)],
        undirected: &[(usize, usize)],
    ) -> Self {
        let edges = directed
            .iter()
            .map(|&(a, b)| Edge::directed(names[a].clone(), names[b].clone()))
            .chain(undirected.iter().map(|&(a, b)| Edge::undirected(names[a].clone(), names[b].clone())))
            .collect::<Vec<_>>();
        MixedGraph::new(&names, edges).expect("indexed graph is valid by construction")
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Resolves a list of names to a node set.
    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet, GraphError> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect()
    }

    pub fn names_of<'a>(&'a self, set: impl IntoIterator<Item = &'a usize>) -> Vec<String> {
        set.into_iter().map(|&i| self.names[i].clone()).collect()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Undirected neighbours.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// All adjacent nodes regardless of edge kind, ascending.
    pub fn adjacent(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.parents[i].iter().chain(&self.children[i]).chain(&self.neighbors[i]).copied().collect();
        out.sort_unstable();
        out
    }

    pub fn link(&self, a: usize, b: usize) -> Option<Link> {
        if self.children[a].binary_search(&b).is_ok() {
            Some(Link::Out)
        } else if self.parents[a].binary_search(&b).is_ok() {
            Some(Link::In)
        } else if self.neighbors[a].binary_search(&b).is_ok() {
            Some(Link::Undirected)
        } else {
            None
        }
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.link(a, b).is_some()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum::<usize>() + self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_undirected(&self) -> bool {
        self.neighbors.iter().any(|n| !n.is_empty())
    }

    /// Edges in canonical order: by tail name, then head name. Undirected
    /// edges are reported with the smaller name as tail.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count());
        for a in 0..self.node_count() {
            let mut row: Vec<(usize, EdgeKind)> = self.children[a]
                .iter()
                .map(|&b| (b, EdgeKind::Directed))
                .chain(self.neighbors[a].iter().filter(|&&b| b > a).map(|&b| (b, EdgeKind::Undirected)))
                .collect();
            row.sort_unstable();
            for (b, kind) in row {
                out.push(Edge { tail: self.names[a].clone(), head: self.names[b].clone(), kind });
            }
        }
        out
    }

    /// Directed edges as index pairs.
    pub fn directed_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.node_count()).flat_map(|a| self.children[a].iter().map(move |&b| (a, b))).collect()
    }

    /// Undirected edges as index pairs with the smaller index first.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.node_count())
            .flat_map(|a| self.neighbors[a].iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }

    /// True iff the directed subgraph has no directed cycle. Undirected edges
    /// are ignored.
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Kahn's algorithm over directed edges, smallest index first.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Errors unless the graph is a DAG: acyclic and fully directed.
    pub fn require_dag(&self) -> Result<(), GraphError> {
        if self.has_undirected() {
            return Err(GraphError::UndirectedEdges);
        }
        if !self.is_acyclic() {
            return Err(GraphError::Cyclic);
        }
        Ok(())
    }

    /// Returns a copy with the listed directed edges removed.
    pub fn without_edges(&self, remove: impl Fn(usize, usize) -> bool) -> MixedGraph {
        let directed: Vec<_> = self.directed_pairs().into_iter().filter(|&(a, b)| !remove(a, b)).collect();
        MixedGraph::from_indexed(self.names.clone(), &directed, &self.undirected_pairs())
    }

    fn closure<'a>(&'a self, x: usize, step: impl Fn(usize) -> &'a [usize]) -> NodeSet {
        let mut seen = NodeSet::new();
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            for &w in step(v) {
                if w != x && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Strict ancestors of `x` along directed edges.
    pub fn ancestors(&self, x: usize) -> NodeSet {
        self.closure(x, |v| &self.parents[v])
    }

    /// Strict descendants of `x` along directed edges.
    pub fn descendants(&self, x: usize) -> NodeSet {
        self.closure(x, |v| &self.children[v])
    }

    /// Union of `set` and all descendants of its members.
    pub fn descendants_of_set(&self, set: &NodeSet) -> NodeSet {
        let mut out = set.clone();
        for &s in set {
            out.extend(self.descendants(s));
        }
        out
    }

    /// Union of `set` and all ancestors of its members.
    pub fn ancestors_of_set(&self, set: &NodeSet) -> NodeSet {
        let mut out = set.clone();
        for &s in set {
            out.extend(self.ancestors(s));
        }
        out
    }
}

/// Ancestors by name. Requires an acyclic graph.
pub fn ancestors(g: &MixedGraph, x: &str) -> Result<NodeSet, GraphError> {
    let i = g.index_of(x)?;
    if !g.is_acyclic() {
        return Err(GraphError::Cyclic);
    }
    Ok(g.ancestors(i))
}

/// Descendants by name. Requires an acyclic graph.
pub fn descendants(g: &MixedGraph, x: &str) -> Result<NodeSet, GraphError> {
    let i = g.index_of(x)?;
    if !g.is_acyclic() {
        return Err(GraphError::Cyclic);
    }
    Ok(g.descendants(i))
}

/// A simple path, stored as node indices. Traversal ignores edge direction;
/// the graph supplies the orientation of each step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub nodes: Vec<usize>,
}

impl Path {
    /// Validates that `nodes` is a simple path in `g`.
    pub fn new(g: &MixedGraph, nodes: Vec<usize>) -> Result<Self, GraphError> {
        if nodes.len() < 2 {
            return Err(GraphError::InvalidPath("fewer than two nodes".into()));
        }
        let mut seen = NodeSet::new();
        for &v in &nodes {
            if v >= g.node_count() {
                return Err(GraphError::InvalidPath(format!("node index {v} out of range")));
            }
            if !seen.insert(v) {
                return Err(GraphError::InvalidPath(format!("node {} repeats", g.name(v))));
            }
        }
        for w in nodes.windows(2) {
            if !g.is_adjacent(w[0], w[1]) {
                return Err(GraphError::InvalidPath(format!("{} and {} are not adjacent", g.name(w[0]), g.name(w[1]))));
            }
        }
        Ok(Path { nodes })
    }

    pub fn from_names<S: AsRef<str>>(g: &MixedGraph, names: &[S]) -> Result<Self, GraphError> {
        let nodes = names.iter().map(|n| g.index_of(n.as_ref())).collect::<Result<Vec<_>, _>>()?;
        Path::new(g, nodes)
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().expect("path has at least two nodes")
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interior(&self) -> &[usize] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn names(&self, g: &MixedGraph) -> Vec<String> {
        g.names_of(&self.nodes)
    }

    /// The connecting edges in path order, each as `(from, to, link)`.
    pub fn steps<'a>(&'a self, g: &'a MixedGraph) -> impl Iterator<Item = (usize, usize, Link)> + 'a {
        self.nodes.windows(2).map(move |w| (w[0], w[1], g.link(w[0], w[1]).expect("validated path")))
    }

    /// True iff every step is a directed edge pointing forward.
    pub fn is_directed(&self, g: &MixedGraph) -> bool {
        self.steps(g).all(|(_, _, l)| l == Link::Out)
    }

    /// True iff the first edge points into the start node.
    pub fn starts_into(&self, g: &MixedGraph) -> bool {
        g.link(self.nodes[0], self.nodes[1]) == Some(Link::In)
    }

    /// Interior nodes with both adjacent path edges pointing into them.
    pub fn colliders(&self, g: &MixedGraph) -> Vec<usize> {
        self.nodes
            .windows(3)
            .filter(|w| g.link(w[0], w[1]) == Some(Link::Out) && g.link(w[2], w[1]) == Some(Link::Out))
            .map(|w| w[1])
            .collect()
    }

    pub fn display(&self, g: &MixedGraph) -> String {
        let mut s = g.name(self.nodes[0]).to_string();
        for (_, b, l) in self.steps(g) {
            s.push_str(match l {
                Link::Out => " -> ",
                Link::In => " <- ",
                Link::Undirected => " -- ",
            });
            s.push_str(g.name(b));
        }
        s
    }
}

/// All simple paths from `x` to `y` with at most `max_len` edges, ignoring
/// edge direction during traversal, ordered lexicographically by node names.
pub fn enumerate_paths(g: &MixedGraph, x: usize, y: usize, max_len: usize) -> Vec<Path> {
    let mut out = Vec::new();
    if x == y || max_len == 0 {
        return out;
    }
    let mut on_path = vec![false; g.node_count()];
    let mut stack = vec![x];
    on_path[x] = true;
    walk(g, y, max_len, &mut stack, &mut on_path, &mut out);
    // Depth-first with ascending neighbours already yields prefix-lexicographic
    // order; the sort keeps that guarantee explicit.
    out.sort();
    out
}

fn walk(g: &MixedGraph, y: usize, max_len: usize, stack: &mut Vec<usize>, on_path: &mut [bool], out: &mut Vec<Path>) {
    let v = *stack.last().unwrap();
    for w in g.adjacent(v) {
        if on_path[w] {
            continue;
        }
        if w == y {
            let mut nodes = stack.clone();
            nodes.push(w);
            out.push(Path { nodes });
            continue;
        }
        if stack.len() < max_len {
            stack.push(w);
            on_path[w] = true;
            walk(g, y, max_len, stack, on_path, out);
            on_path[w] = false;
            stack.pop();
        }
    }
}

/// Name-level wrapper over [`enumerate_paths`].
pub fn enumerate_paths_by_name(g: &MixedGraph, x: &str, y: &str, max_len: usize) -> Result<Vec<Path>, GraphError> {
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    if xi == yi {
        return Err(GraphError::OverlappingSets(x.to_string()));
    }
    Ok(enumerate_paths(g, xi, yi, max_len))
}

/// d-connection rule for a single path: open iff no conditioned non-collider
/// and every collider is conditioned or has a conditioned descendant.
pub fn path_open(g: &MixedGraph, p: &Path, z: &NodeSet) -> Result<bool, GraphError> {
    g.require_dag()?;
    for &end in [p.start(), p.end()].iter() {
        if z.contains(&end) {
            return Err(GraphError::EndpointConditioned(g.name(end).to_string()));
        }
    }
    Ok(path_open_unchecked(g, p, z))
}

pub(crate) fn path_open_unchecked(g: &MixedGraph, p: &Path, z: &NodeSet) -> bool {
    for w in p.nodes.windows(3) {
        let collider = g.link(w[0], w[1]) == Some(Link::Out) && g.link(w[2], w[1]) == Some(Link::Out);
        if collider {
            if !z.contains(&w[1]) && g.descendants(w[1]).is_disjoint(z) {
                return false;
            }
        } else if z.contains(&w[1]) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Directed,
    Backdoor,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathClass {
    pub kind: PathKind,
    pub open_given: NodeSet,
}

/// Three-way classification of a path leaving `x`.
pub fn classify_path(g: &MixedGraph, p: &Path, x: usize, z: &NodeSet) -> Result<PathClass, GraphError> {
    if p.start() != x {
        return Err(GraphError::InvalidPath(format!("path does not start at {}", g.name(x))));
    }
    let open = path_open(g, p, z)?;
    let kind = if p.is_directed(g) {
        PathKind::Directed
    } else if open {
        PathKind::Backdoor
    } else {
        PathKind::Closed
    };
    Ok(PathClass { kind, open_given: z.clone() })
}

/// d-separation of `xs` and `ys` given `z`, by the reachability ("Bayes ball")
/// procedure: `ys` are d-separated iff none is reachable from `xs` along an
/// active trail.
pub fn d_separated(g: &MixedGraph, xs: &NodeSet, ys: &NodeSet, z: &NodeSet) -> Result<bool, GraphError> {
    g.require_dag()?;
    for (a, b) in [(xs, ys), (xs, z), (ys, z)] {
        if let Some(&v) = a.intersection(b).next() {
            return Err(GraphError::OverlappingSets(g.name(v).to_string()));
        }
    }
    let reach = reachable(g, xs, z);
    Ok(ys.iter().all(|y| !reach[*y]))
}

/// Nodes reachable from `xs` by an active trail given `z`.
pub(crate) fn reachable(g: &MixedGraph, xs: &NodeSet, z: &NodeSet) -> Vec<bool> {
    let n = g.node_count();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    // Ancestors of z (inclusive) decide whether a collider is opened.
    let mut anc_z = vec![false; n];
    let mut stack: Vec<usize> = z.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if anc_z[v] {
            continue;
        }
        anc_z[v] = true;
        stack.extend(g.parents(v).iter().copied().filter(|&p| !anc_z[p]));
    }

    // Visit states: (node, arrived_from_child). "Up" = travelling against the
    // edge direction (arrived from a child), "down" = along it.
    let mut visited_up = vec![false; n];
    let mut visited_down = vec![false; n];
    let mut reached = vec![false; n];
    let mut queue: VecDeque<(usize, bool)> = xs.iter().map(|&x| (x, true)).collect();
    while let Some((v, up)) = queue.pop_front() {
        let seen = if up { &mut visited_up[v] } else { &mut visited_down[v] };
        if *seen {
            continue;
        }
        *seen = true;
        if !in_z[v] {
            reached[v] = true;
        }
        if up {
            if !in_z[v] {
                for &p in g.parents(v) {
                    queue.push_back((p, true));
                }
                for &c in g.children(v) {
                    queue.push_back((c, false));
                }
            }
        } else {
            if !in_z[v] {
                for &c in g.children(v) {
                    queue.push_back((c, false));
                }
            }
            if anc_z[v] {
                for &p in g.parents(v) {
                    queue.push_back((p, true));
                }
            }
        }
    }
    for &x in xs {
        reached[x] = false;
    }
    reached
}
