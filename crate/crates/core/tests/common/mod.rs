//! Random-graph generators and brute-force oracles shared by the integration
//! tests. Nothing here calls the library's own path or separation code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use causal_audit::graph::{Edge, MixedGraph, NodeSet};
use causal_audit::scm::{ScmSpec, ScmVariable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn node_name(i: usize) -> String {
    format!("V{i}")
}

/// Erdős–Rényi DAG over a random topological order.
pub fn random_dag(seed: u64, min_nodes: usize, max_nodes: usize, p: f64) -> MixedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(min_nodes..=max_nodes);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push(Edge::directed(node_name(order[i]), node_name(order[j])));
            }
        }
    }
    let names: Vec<String> = (0..n).map(node_name).collect();
    MixedGraph::new(&names, edges).unwrap()
}

/// The 200-graph corpus used by the separation and adjustment checks.
pub fn dag_corpus() -> Vec<MixedGraph> {
    (0..200).map(|s| random_dag(s, 2, 8, 0.35)).collect()
}

/// Linear-Gaussian SCM on a random DAG with |coefficient| in `[lo, hi]` and
/// unit noise.
pub fn random_scm(seed: u64, nodes: usize, p: f64, lo: f64, hi: f64) -> ScmSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let mut variables = Vec::new();
    for (pos, &v) in order.iter().enumerate() {
        let mut parents = Vec::new();
        let mut coefficients = Vec::new();
        for &u in &order[..pos] {
            if rng.gen_bool(p) {
                parents.push(node_name(u));
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                coefficients.push(sign * rng.gen_range(lo..=hi));
            }
        }
        variables.push(ScmVariable { name: node_name(v), parents, coefficients, intercept: 0.0, noise_std: 1.0 });
    }
    ScmSpec { format_version: 1, variables, ranges: Default::default() }
}

fn neighbours(g: &MixedGraph, v: usize) -> Vec<usize> {
    let mut out: Vec<usize> = g.parents(v).iter().chain(g.children(v)).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// All simple paths between `x` and `y`, ignoring edge direction.
pub fn simple_paths(g: &MixedGraph, x: usize, y: usize) -> Vec<Vec<usize>> {
    fn go(g: &MixedGraph, y: usize, path: &mut Vec<usize>, on: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == y {
            out.push(path.clone());
            return;
        }
        for w in neighbours(g, v) {
            if !on[w] {
                on[w] = true;
                path.push(w);
                go(g, y, path, on, out);
                path.pop();
                on[w] = false;
            }
        }
    }
    let mut on = vec![false; g.node_count()];
    on[x] = true;
    let mut out = Vec::new();
    go(g, y, &mut vec![x], &mut on, &mut out);
    out
}

fn points_into(g: &MixedGraph, from: usize, to: usize) -> bool {
    g.children(from).contains(&to)
}

/// Strict descendants by repeated child expansion.
pub fn descendants(g: &MixedGraph, v: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![v];
    while let Some(u) = frontier.pop() {
        for &c in g.children(u) {
            if out.insert(c) {
                frontier.push(c);
            }
        }
    }
    out
}

/// A path is open given `z` when every collider is in `z` or has a
/// descendant in `z`, and no other interior node is in `z`.
pub fn path_is_open(g: &MixedGraph, path: &[usize], z: &NodeSet) -> bool {
    for i in 1..path.len() - 1 {
        let (a, b, c) = (path[i - 1], path[i], path[i + 1]);
        let collider = points_into(g, a, b) && points_into(g, c, b);
        if collider {
            if !z.contains(&b) && descendants(g, b).is_disjoint(z) {
                return false;
            }
        } else if z.contains(&b) {
            return false;
        }
    }
    true
}

/// Precomputed paths for every ordered pair, so separation for many
/// conditioning sets can be evaluated without re-enumerating.
pub struct PathTable {
    n: usize,
    paths: Vec<Vec<Vec<usize>>>,
}

impl PathTable {
    pub fn new(g: &MixedGraph) -> Self {
        let n = g.node_count();
        let mut paths = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                paths.push(if x == y { Vec::new() } else { simple_paths(g, x, y) });
            }
        }
        PathTable { n, paths }
    }

    pub fn paths(&self, x: usize, y: usize) -> &[Vec<usize>] {
        &self.paths[x * self.n + y]
    }

    pub fn pair_separated(&self, g: &MixedGraph, x: usize, y: usize, z: &NodeSet) -> bool {
        !self.paths(x, y).iter().any(|p| path_is_open(g, p, z))
    }
}

pub fn oracle_d_separated(g: &MixedGraph, xs: &NodeSet, ys: &NodeSet, z: &NodeSet) -> bool {
    xs.iter().all(|&x| ys.iter().all(|&y| !simple_paths(g, x, y).iter().any(|p| path_is_open(g, p, z))))
}

/// Pearl's backdoor criterion for a single exposure, by path enumeration.
pub fn oracle_backdoor(g: &MixedGraph, table: &PathTable, x: usize, y: usize, z: &NodeSet) -> bool {
    if !descendants(g, x).is_disjoint(z) {
        return false;
    }
    table.paths(x, y).iter().filter(|p| points_into(g, p[1], x)).all(|p| !path_is_open(g, p, z))
}

/// Single-door criterion: no descendant of `y` in `z`, and every path other
/// than the edge `x -> y` itself is blocked.
pub fn oracle_single_door(g: &MixedGraph, table: &PathTable, x: usize, y: usize, z: &NodeSet) -> bool {
    if z.contains(&y) || !descendants(g, y).is_disjoint(z) {
        return false;
    }
    table.paths(x, y).iter().filter(|p| !(p.len() == 2 && points_into(g, x, y))).all(|p| !path_is_open(g, p, z))
}

pub fn subsets(items: &[usize]) -> impl Iterator<Item = NodeSet> + '_ {
    (0u32..1 << items.len()).map(move |m| items.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect())
}

/// Every DAG on `n` labelled nodes (feasible for n ≤ 4).
pub fn all_dags(n: usize) -> Vec<MixedGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let names: Vec<String> = (0..n).map(node_name).collect();
    let mut out = Vec::new();
    // each unordered pair: absent, a->b, b->a
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => edges.push(Edge::directed(node_name(a), node_name(b))),
                2 => edges.push(Edge::directed(node_name(b), node_name(a))),
                _ => {}
            }
            c /= 3;
        }
        let g = MixedGraph::new(&names, edges).unwrap();
        if g.is_acyclic() {
            out.push(g);
        }
    }
    out
}
