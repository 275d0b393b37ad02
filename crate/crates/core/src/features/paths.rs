//! Weighted shortest paths with distance `1 / weight`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::WeightedGraph;

/// Relative tolerance under which two path lengths count as equal.
pub const PATH_TIE_TOLERANCE: f64 = 1e-10;

pub(crate) fn same_length(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATH_TIE_TOLERANCE * a.max(b)
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths, with path counts and predecessor lists for
/// dependency accumulation.
pub(crate) struct Sssp {
    pub dist: Vec<f64>,
    pub sigma: Vec<f64>,
    pub preds: Vec<Vec<usize>>,
    /// Nodes in the order they were settled (nondecreasing distance).
    pub order: Vec<usize>,
}

impl Sssp {
    pub fn new(n: usize) -> Self {
        Sssp {
            dist: vec![f64::INFINITY; n],
            sigma: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
        }
    }

    pub fn run(&mut self, g: &WeightedGraph, source: usize) {
        let n = g.node_count();
        self.dist.clear();
        self.dist.resize(n, f64::INFINITY);
        self.sigma.clear();
        self.sigma.resize(n, 0.0);
        for p in &mut self.preds {
            p.clear();
        }
        self.preds.resize(n, Vec::new());
        self.order.clear();
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        self.dist[source] = 0.0;
        self.sigma[source] = 1.0;
        heap.push(Entry {
            dist: 0.0,
            node: source,
        });
        while let Some(Entry { dist, node: u }) = heap.pop() {
            if settled[u] || dist > self.dist[u] {
                continue;
            }
            settled[u] = true;
            self.order.push(u);
            for &(v, w) in g.neighbors(u) {
                if settled[v] {
                    continue;
                }
                let cand = dist + 1.0 / w;
                let cur = self.dist[v];
                if cur.is_finite() && same_length(cand, cur) {
                    self.sigma[v] += self.sigma[u];
                    self.preds[v].push(u);
                } else if cand < cur {
                    self.dist[v] = cand;
                    self.sigma[v] = self.sigma[u];
                    self.preds[v].clear();
                    self.preds[v].push(u);
                    heap.push(Entry { dist: cand, node: v });
                }
            }
        }
    }
}

/// Distances only.
pub(crate) fn distances_from(g: &WeightedGraph, source: usize) -> Vec<f64> {
    let mut s = Sssp::new(g.node_count());
    s.run(g, source);
    s.dist
}

/// Quantities derived from all-pairs shortest paths of one ego graph.
pub(crate) struct PathSummary {
    /// Sum over unordered pairs `{s, t}` not containing `focus` of the share
    /// of shortest `s`–`t` paths passing through `focus`.
    pub focus_dependency: f64,
    /// Distances from `focus`.
    pub focus_dist: Vec<f64>,
}

pub(crate) fn path_summary(g: &WeightedGraph, focus: usize) -> PathSummary {
    let n = g.node_count();
    let mut sssp = Sssp::new(n);
    let mut delta = vec![0.0; n];
    let mut dependency = 0.0;
    let mut focus_dist = Vec::new();
    for s in 0..n {
        sssp.run(g, s);
        if s == focus {
            focus_dist = sssp.dist.clone();
            continue;
        }
        delta.fill(0.0);
        for &w in sssp.order.iter().rev() {
            let coeff = (1.0 + delta[w]) / sssp.sigma[w];
            for &v in &sssp.preds[w] {
                delta[v] += sssp.sigma[v] * coeff;
            }
        }
        dependency += delta[focus];
    }
    PathSummary {
        // every unordered pair was visited from both ends
        focus_dependency: dependency / 2.0,
        focus_dist,
    }
}
