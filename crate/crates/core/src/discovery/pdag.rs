//! Partially directed graphs: Meek closure, DAG→CPDAG, consistent extension
//! and structural Hamming distance.

use super::DiscoveryError;
use crate::graph::MixedGraph;

/// Dense adjacency working copy. `dir[a][b]` means `a -> b`; `und` is
/// symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Pdag {
    pub names: Vec<String>,
    pub dir: Vec<Vec<bool>>,
    pub und: Vec<Vec<bool>>,
}

impl Pdag {
    pub fn empty(names: Vec<String>) -> Self {
        let n = names.len();
        Pdag { names, dir: vec![vec![false; n]; n], und: vec![vec![false; n]; n] }
    }

    pub fn from_graph(g: &MixedGraph) -> Self {
        let mut p = Pdag::empty(g.names().to_vec());
        for (a, b) in g.directed_pairs() {
            p.dir[a][b] = true;
        }
        for (a, b) in g.undirected_pairs() {
            p.set_undirected(a, b);
        }
        p
    }

    pub fn to_graph(&self) -> MixedGraph {
        let n = self.n();
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if self.dir[a][b] {
                    directed.push((a, b));
                }
                if a < b && self.und[a][b] {
                    undirected.push((a, b));
                }
            }
        }
        MixedGraph::from_indexed(self.names.clone(), &directed, &undirected)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.dir[a][b] || self.dir[b][a] || self.und[a][b]
    }

    pub fn set_undirected(&mut self, a: usize, b: usize) {
        self.und[a][b] = true;
        self.und[b][a] = true;
    }

    pub fn orient(&mut self, a: usize, b: usize) {
        self.und[a][b] = false;
        self.und[b][a] = false;
        self.dir[b][a] = false;
        self.dir[a][b] = true;
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.und[a][b] = false;
        self.und[b][a] = false;
        self.dir[a][b] = false;
        self.dir[b][a] = false;
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.dir[u][v]).collect()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.und[u][v]).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents(v).len()).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for c in 0..n {
                if self.dir[v][c] {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        stack.push(c);
                    }
                }
            }
        }
        seen == n
    }

    fn same_skeleton(&self, other: &Pdag) -> bool {
        let n = self.n();
        (0..n).all(|a| (0..n).all(|b| self.adjacent(a, b) == other.adjacent(a, b)))
    }

    /// Unshielded colliders `(a, c, b)` with `a < b` over directed edges.
    pub fn v_structures(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for c in 0..n {
            let pa = self.parents(c);
            for (i, &a) in pa.iter().enumerate() {
                for &b in &pa[i + 1..] {
                    if !self.adjacent(a, b) {
                        out.push((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// Which Meek rule, if any, compels `a -> b` for the undirected edge `a -- b`.
    fn compelled(&self, a: usize, b: usize) -> bool {
        let n = self.n();
        // R1: c -> a -- b, c and b nonadjacent.
        if (0..n).any(|c| self.dir[c][a] && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a -> c -> b.
        if (0..n).any(|c| self.dir[a][c] && self.dir[c][b]) {
            return true;
        }
        // R3: a -- c -> b, a -- d -> b, c and d nonadjacent.
        let mids: Vec<usize> = (0..n).filter(|&c| self.und[a][c] && self.dir[c][b]).collect();
        for (i, &c) in mids.iter().enumerate() {
            if mids[i + 1..].iter().any(|&d| !self.adjacent(c, d)) {
                return true;
            }
        }
        // R4: a -- d -> c -> b, a adjacent to c, d and b nonadjacent.
        for c in 0..n {
            if !(self.dir[c][b] && self.adjacent(a, c)) {
                continue;
            }
            if (0..n).any(|d| self.und[a][d] && self.dir[d][c] && !self.adjacent(d, b)) {
                return true;
            }
        }
        false
    }

    /// Applies R1–R4 to a fixpoint. Fails if the result has a directed cycle.
    pub fn meek_close(&mut self) -> Result<(), DiscoveryError> {
        let n = self.n();
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if a != b && self.und[a][b] && self.compelled(a, b) {
                        self.orient(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if self.is_acyclic() {
            Ok(())
        } else {
            Err(DiscoveryError::Inconsistent)
        }
    }

    pub fn cpdag_of_dag(&self) -> Pdag {
        let mut p = Pdag::empty(self.names.clone());
        let n = self.n();
        for a in 0..n {
            for b in a + 1..n {
                if self.adjacent(a, b) {
                    p.set_undirected(a, b);
                }
            }
        }
        for (a, c, b) in self.v_structures() {
            p.orient(a, c);
            p.orient(b, c);
        }
        p.meek_close().expect("closure of a DAG pattern is acyclic");
        p
    }

    /// Deterministic consistent extension: orient the lexicographically
    /// smallest undirected edge forward, re-close, repeat. Falls back to the
    /// Dor–Tarsi sink elimination when that greedy route fails.
    pub fn extend(&self) -> Result<Pdag, DiscoveryError> {
        if !self.is_acyclic() {
            return Err(DiscoveryError::NotExtendable);
        }
        let target_v = self.v_structures();
        if let Some(dag) = self.greedy_extension() {
            if dag.is_acyclic() && dag.same_skeleton(self) && dag.v_structures() == target_v {
                return Ok(dag);
            }
        }
        let dag = self.dor_tarsi().ok_or(DiscoveryError::NotExtendable)?;
        if dag.v_structures() != target_v {
            return Err(DiscoveryError::NotExtendable);
        }
        Ok(dag)
    }

    fn greedy_extension(&self) -> Option<Pdag> {
        let mut p = self.clone();
        p.meek_close().ok()?;
        let n = p.n();
        while let Some((a, b)) = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).find(|&(a, b)| p.und[a][b]) {
            p.orient(a, b);
            p.meek_close().ok()?;
        }
        Some(p)
    }

    fn dor_tarsi(&self) -> Option<Pdag> {
        let n = self.n();
        let mut work = self.clone();
        let mut out = self.clone();
        let mut alive = vec![true; n];
        for _ in 0..n {
            let sink = (0..n).rev().find(|&x| {
                alive[x]
                    && (0..n).all(|y| !alive[y] || !work.dir[x][y])
                    && {
                        let adj: Vec<usize> = (0..n).filter(|&y| alive[y] && work.adjacent(x, y)).collect();
                        adj.iter()
                            .filter(|&&y| work.und[x][y])
                            .all(|&y| adj.iter().all(|&z| z == y || work.adjacent(y, z)))
                    }
            })?;
            for y in 0..n {
                if alive[y] && work.und[sink][y] {
                    out.orient(y, sink);
                }
            }
            alive[sink] = false;
            for y in 0..n {
                work.remove(sink, y);
            }
        }
        Some(out)
    }
}

/// Applies Meek rules R1–R4 until no rule fires.
pub fn meek_closure(g: &MixedGraph) -> Result<MixedGraph, DiscoveryError> {
    let mut p = Pdag::from_graph(g);
    if !p.is_acyclic() {
        return Err(DiscoveryError::Inconsistent);
    }
    p.meek_close()?;
    Ok(p.to_graph())
}

/// The CPDAG (essential graph) of a DAG.
pub fn dag_to_cpdag(g: &MixedGraph) -> Result<MixedGraph, DiscoveryError> {
    g.require_dag().map_err(|_| DiscoveryError::NotADag)?;
    Ok(Pdag::from_graph(g).cpdag_of_dag().to_graph())
}

/// A DAG with the same skeleton and v-structures as the given PDAG that keeps
/// every directed edge.
pub fn consistent_extension(g: &MixedGraph) -> Result<MixedGraph, DiscoveryError> {
    Ok(Pdag::from_graph(g).extend()?.to_graph())
}

/// Structural Hamming distance: number of node pairs whose edge mark differs
/// (missing, extra, or differently oriented). Both graphs must share names.
pub fn shd(a: &MixedGraph, b: &MixedGraph) -> Result<usize, DiscoveryError> {
    if a.names() != b.names() {
        return Err(DiscoveryError::NodeMismatch);
    }
    let n = a.node_count();
    let mut d = 0;
    for i in 0..n {
        for j in i + 1..n {
            if a.link(i, j) != b.link(i, j) {
                d += 1;
            }
        }
    }
    Ok(d)
}
