//! Greedy Equivalence Search over CPDAGs with the Gaussian BIC.
//!
//! Forward phase applies the best valid Insert(x, y, T) while it improves the
//! score; the backward phase then applies the best valid Delete(x, y, H).
//! After every step the PDAG is re-completed to a CPDAG via a consistent
//! extension. Ties are broken by `(x, y, T/H)` in node-name order, and columns
//! are sorted by name before the search, so the result does not depend on
//! column order in the input.

use std::collections::HashMap;

use super::pdag::Pdag;
use super::score::{bic_local, sufficient_stats, SufficientStats};
use super::DiscoveryError;
use crate::dataset::Dataset;
use crate::graph::MixedGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct GesConfig {
    pub penalty_multiplier: f64,
    /// Upper bound on parents per node; `None` means `p - 1`.
    pub max_parents: Option<usize>,
    pub forward: bool,
    pub backward: bool,
}

impl Default for GesConfig {
    fn default() -> Self {
        GesConfig { penalty_multiplier: 1.0, max_parents: None, forward: true, backward: true }
    }
}

/// Learns a CPDAG from linear-Gaussian data.
pub fn ges(d: &Dataset, cfg: &GesConfig) -> Result<MixedGraph, DiscoveryError> {
    if !(cfg.penalty_multiplier > 0.0 && cfg.penalty_multiplier.is_finite()) {
        return Err(DiscoveryError::InvalidConfig("penalty multiplier must be positive".into()));
    }
    if d.row_count() <= d.column_count() {
        return Err(DiscoveryError::InsufficientRows { rows: d.row_count(), columns: d.column_count() });
    }
    let mut order: Vec<usize> = (0..d.column_count()).collect();
    order.sort_by(|&a, &b| d.names()[a].cmp(&d.names()[b]));
    let sorted = Dataset::new(order.iter().map(|&j| (d.names()[j].clone(), d.column_at(j).to_vec())).collect())
        .expect("reordering keeps dataset invariants");
    let stats = sufficient_stats(&sorted);
    let mut search = Search::new(&stats, cfg);
    let p = stats.column_count();
    let mut state = Pdag::empty(stats.names.clone());
    if cfg.forward {
        while let Some(op) = search.best_insert(&state) {
            tracing::debug!(x = %stats.names[op.x], y = %stats.names[op.y], delta = op.delta, "insert");
            op.apply_insert(&mut state);
            state = complete(&state)?;
        }
    }
    if cfg.backward {
        while let Some(op) = search.best_delete(&state) {
            tracing::debug!(x = %stats.names[op.x], y = %stats.names[op.y], delta = op.delta, "delete");
            op.apply_delete(&mut state);
            state = complete(&state)?;
        }
    }
    debug_assert_eq!(state.n(), p);
    Ok(state.to_graph())
}

fn complete(p: &Pdag) -> Result<Pdag, DiscoveryError> {
    Ok(p.extend()?.cpdag_of_dag())
}

#[derive(Debug, Clone)]
struct Operator {
    x: usize,
    y: usize,
    /// T for Insert, H for Delete; ascending.
    set: Vec<usize>,
    delta: f64,
}

impl Operator {
    fn key(&self) -> (usize, usize, &[usize]) {
        (self.x, self.y, &self.set)
    }

    fn beats(&self, other: &Option<Operator>) -> bool {
        match other {
            None => true,
            Some(o) => self.delta > o.delta || (self.delta == o.delta && self.key() < o.key()),
        }
    }

    fn apply_insert(&self, g: &mut Pdag) {
        g.orient(self.x, self.y);
        for &t in &self.set {
            g.orient(t, self.y);
        }
    }

    fn apply_delete(&self, g: &mut Pdag) {
        g.remove(self.x, self.y);
        for &h in &self.set {
            g.orient(self.y, h);
            if g.und[self.x][h] {
                g.orient(self.x, h);
            }
        }
    }
}

struct Search<'a> {
    stats: &'a SufficientStats,
    penalty: f64,
    max_parents: usize,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> Search<'a> {
    fn new(stats: &'a SufficientStats, cfg: &GesConfig) -> Self {
        let p = stats.column_count();
        Search {
            stats,
            penalty: cfg.penalty_multiplier,
            max_parents: cfg.max_parents.unwrap_or(p.saturating_sub(1)),
            cache: HashMap::new(),
        }
    }

    fn local(&mut self, node: usize, mut parents: Vec<usize>) -> f64 {
        parents.sort_unstable();
        let (stats, penalty) = (self.stats, self.penalty);
        *self.cache.entry((node, parents)).or_insert_with_key(|(v, pa)| {
            bic_local(stats, *v, pa, penalty).expect("node never among its own parents").value
        })
    }

    fn best_insert(&mut self, g: &Pdag) -> Option<Operator> {
        let n = g.n();
        let mut best: Option<Operator> = None;
        for x in 0..n {
            for y in 0..n {
                if x == y || g.adjacent(x, y) {
                    continue;
                }
                let ny = g.neighbors(y);
                let na: Vec<usize> = ny.iter().copied().filter(|&v| g.adjacent(v, x)).collect();
                let t0: Vec<usize> = ny.iter().copied().filter(|&v| !g.adjacent(v, x)).collect();
                let pa = g.parents(y);
                for mask in 0u64..(1u64 << t0.len()) {
                    let t: Vec<usize> = subset(&t0, mask);
                    let mut s = na.clone();
                    s.extend(&t);
                    s.sort_unstable();
                    if pa.len() + s.len() + 1 > self.max_parents {
                        continue;
                    }
                    if !is_clique(g, &s) || semi_directed_path(g, y, x, &s) {
                        continue;
                    }
                    let mut base = pa.clone();
                    base.extend(&s);
                    let mut with = base.clone();
                    with.push(x);
                    let delta = self.local(y, with) - self.local(y, base);
                    let op = Operator { x, y, set: t, delta };
                    if delta > 0.0 && op.beats(&best) {
                        best = Some(op);
                    }
                }
            }
        }
        best
    }

    fn best_delete(&mut self, g: &Pdag) -> Option<Operator> {
        let n = g.n();
        let mut best: Option<Operator> = None;
        for x in 0..n {
            for y in 0..n {
                if !(g.dir[x][y] || g.und[x][y]) {
                    continue;
                }
                let na: Vec<usize> = g.neighbors(y).into_iter().filter(|&v| v != x && g.adjacent(v, x)).collect();
                let pa: Vec<usize> = g.parents(y).into_iter().filter(|&v| v != x).collect();
                for mask in 0u64..(1u64 << na.len()) {
                    let h = subset(&na, mask);
                    let rest: Vec<usize> = na.iter().copied().filter(|v| !h.contains(v)).collect();
                    if !is_clique(g, &rest) {
                        continue;
                    }
                    let mut without = pa.clone();
                    without.extend(&rest);
                    let mut with = without.clone();
                    with.push(x);
                    let delta = self.local(y, without) - self.local(y, with);
                    let op = Operator { x, y, set: h, delta };
                    if delta > 0.0 && op.beats(&best) {
                        best = Some(op);
                    }
                }
            }
        }
        best
    }
}

fn subset(items: &[usize], mask: u64) -> Vec<usize> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect()
}

fn is_clique(g: &Pdag, nodes: &[usize]) -> bool {
    nodes.iter().enumerate().all(|(i, &a)| nodes[i + 1..].iter().all(|&b| g.adjacent(a, b)))
}

/// Is there a semi-directed path from `from` to `to` that avoids `blocked`?
fn semi_directed_path(g: &Pdag, from: usize, to: usize, blocked: &[usize]) -> bool {
    let n = g.n();
    let mut seen = vec![false; n];
    for &b in blocked {
        seen[b] = true;
    }
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if (g.dir[v][w] || g.und[v][w]) && !seen[w] {
                if w == to {
                    return true;
                }
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}
