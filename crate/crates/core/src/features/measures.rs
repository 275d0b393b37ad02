//! The thirteen per-ego network measures.
//!
//! Shortest-path measures treat an edge of weight `w` as having length
//! `1 / w`, so strong ties are short.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::paths::{distances_from, path_summary};
use crate::graph::{EgoGraph, WeightedGraph};

const EIGEN_MAX_ITER: usize = 1000;
const EIGEN_TOLERANCE: f64 = 1e-10;

/// Whether centralities are scaled to graph size (the default) or reported
/// as raw scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityScale {
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Centralities {
    pub degree: f64,
    pub betweenness: f64,
    pub closeness: f64,
    pub eigenvector: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Transitivities {
    pub global: f64,
    pub local: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActorMeasures {
    pub ego_density: f64,
    pub ego_neighbors: f64,
    pub dominant_edges: f64,
    pub ego_weight: f64,
}

/// Degree, betweenness, closeness and eigenvector centrality of the ego.
///
/// Normalised scale: degree / (n-1); betweenness / ((n-1)(n-2)/2);
/// closeness (n-1)/Σd, computed inside the ego's component and multiplied
/// by the reachable fraction when the graph is disconnected; eigenvector
/// entry of the principal eigenvector scaled to unit max-norm.
pub fn centralities(e: &EgoGraph) -> Centralities {
    centralities_scaled(e, CentralityScale::Normalized)
}

pub fn centralities_scaled(e: &EgoGraph, scale: CentralityScale) -> Centralities {
    let g = e.graph();
    let n = g.node_count();
    if n < 2 {
        return Centralities::default();
    }
    let ego = e.ego();
    let paths = path_summary(g, ego);
    let (reach, dsum) = reach_and_sum(&paths.focus_dist, ego);
    let k = g.degree(ego) as f64;
    let nf = n as f64;
    match scale {
        CentralityScale::Normalized => Centralities {
            degree: k / (nf - 1.0),
            betweenness: if n > 2 {
                paths.focus_dependency / ((nf - 1.0) * (nf - 2.0) / 2.0)
            } else {
                0.0
            },
            closeness: if reach > 0 {
                let r = reach as f64;
                (r / dsum) * (r / (nf - 1.0))
            } else {
                0.0
            },
            eigenvector: eigenvector_score(g, ego, false),
        },
        CentralityScale::Raw => Centralities {
            degree: k,
            betweenness: paths.focus_dependency,
            closeness: if reach > 0 { 1.0 / dsum } else { 0.0 },
            eigenvector: eigenvector_score(g, ego, true),
        },
    }
}

fn reach_and_sum(dist: &[f64], ego: usize) -> (usize, f64) {
    let mut reach = 0;
    let mut sum = 0.0;
    for (j, &d) in dist.iter().enumerate() {
        if j != ego && d.is_finite() {
            reach += 1;
            sum += d;
        }
    }
    (reach, sum)
}

fn component_of(g: &WeightedGraph, root: usize) -> Vec<usize> {
    let mut seen = vec![false; g.node_count()];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    let mut out = vec![root];
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Principal-eigenvector entry of `focus` within its connected component.
///
/// Power iteration runs on `A + cI` with `c` half the largest strength; the
/// shift leaves eigenvectors unchanged and removes the sign oscillation
/// that bipartite ego graphs (stars, trees) cause in plain iteration.
fn eigenvector_score(g: &WeightedGraph, focus: usize, unit_l2: bool) -> f64 {
    let comp = component_of(g, focus);
    if comp.len() < 2 {
        return 0.0;
    }
    let mut local = vec![usize::MAX; g.node_count()];
    for (li, &p) in comp.iter().enumerate() {
        local[p] = li;
    }
    let adj: Vec<Vec<(usize, f64)>> = comp
        .iter()
        .map(|&p| g.neighbors(p).iter().map(|&(q, w)| (local[q], w)).collect())
        .collect();
    let shift = adj
        .iter()
        .map(|l| l.iter().map(|&(_, w)| w).sum::<f64>())
        .fold(0.0, f64::max)
        / 2.0;
    let m = comp.len();
    let mut x = vec![1.0; m];
    let mut y = vec![0.0; m];
    for _ in 0..EIGEN_MAX_ITER {
        for i in 0..m {
            y[i] = shift * x[i] + adj[i].iter().map(|&(j, w)| w * x[j]).sum::<f64>();
        }
        let norm = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let mut change = 0.0f64;
        for i in 0..m {
            y[i] /= norm;
            change = change.max((y[i] - x[i]).abs());
        }
        std::mem::swap(&mut x, &mut y);
        if change < EIGEN_TOLERANCE {
            break;
        }
    }
    let v = x[local[focus]];
    if unit_l2 {
        v / x.iter().map(|a| a * a).sum::<f64>().sqrt()
    } else {
        v / x.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Mean inverse shortest-path length over ordered pairs of distinct nodes;
/// unreachable pairs contribute 0.
pub fn global_efficiency(e: &EgoGraph) -> f64 {
    graph_efficiency(e.graph())
}

pub(crate) fn graph_efficiency(g: &WeightedGraph) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for s in 0..n {
        for (t, d) in distances_from(g, s).into_iter().enumerate() {
            if t != s && d.is_finite() {
                sum += 1.0 / d;
            }
        }
    }
    sum / (n as f64 * (n as f64 - 1.0))
}

/// Mean over nodes of the efficiency of the subgraph induced on each node's
/// neighbours, relative to a complete unit-weight neighbourhood (whose
/// efficiency is 1). Nodes with fewer than two neighbours contribute 0.
pub fn local_efficiency(e: &EgoGraph) -> f64 {
    let g = e.graph();
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        if g.degree(i) < 2 {
            continue;
        }
        let nbrs: Vec<usize> = g.neighbors(i).iter().map(|&(j, _)| j).collect();
        let (sub, _) = g.induced(&nbrs);
        total += graph_efficiency(&sub);
    }
    total / n as f64
}

/// Inverse harmonic mean of the ego's shortest-path lengths to every other
/// node; unreachable nodes contribute 0.
pub fn nodal_efficiency(e: &EgoGraph) -> f64 {
    let g = e.graph();
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    let sum: f64 = distances_from(g, e.ego())
        .iter()
        .enumerate()
        .filter(|&(j, d)| j != e.ego() && d.is_finite())
        .map(|(_, d)| 1.0 / d)
        .sum();
    sum / (n as f64 - 1.0)
}

/// Number of edges among the neighbours of `i`.
pub(crate) fn linked_neighbor_pairs(g: &WeightedGraph, i: usize) -> usize {
    let nbrs = g.neighbors(i);
    let mut count = 0;
    for (a, &(u, _)) in nbrs.iter().enumerate() {
        count += sorted_intersection(&nbrs[a + 1..], g.neighbors(u));
    }
    count
}

fn sorted_intersection(a: &[(usize, f64)], b: &[(usize, f64)]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Number of triangles in the graph.
pub fn triangle_count(g: &WeightedGraph) -> usize {
    (0..g.node_count())
        .map(|i| linked_neighbor_pairs(g, i))
        .sum::<usize>()
        / 3
}

/// Graph transitivity (3 × triangles / connected triples) and the ego's
/// clustering coefficient.
pub fn transitivities(e: &EgoGraph) -> Transitivities {
    let g = e.graph();
    let mut closed = 0usize;
    let mut triples = 0usize;
    for i in 0..g.node_count() {
        let k = g.degree(i);
        triples += k * k.saturating_sub(1) / 2;
        closed += linked_neighbor_pairs(g, i);
    }
    // `closed` counts each triangle once per corner, i.e. 3 × triangles
    let global = if triples > 0 {
        closed as f64 / triples as f64
    } else {
        0.0
    };
    let k = g.degree(e.ego());
    let local = if k >= 2 {
        linked_neighbor_pairs(g, e.ego()) as f64 / (k * (k - 1) / 2) as f64
    } else {
        0.0
    };
    Transitivities { global, local }
}

/// Ego density, neighbour count, dominant-edge score and total weight.
///
/// The dominant-edge score is `ln(max(w) - mean(w))` over the ego graph's
/// edge weights, floored at 0 when that deviation is at most 1.
pub fn actor_measures(e: &EgoGraph) -> ActorMeasures {
    let g = e.graph();
    let n = g.node_count() as f64;
    let m = g.edge_count();
    let weights: Vec<f64> = g.edges().map(|(_, _, w)| w).collect();
    let total: f64 = weights.iter().sum();
    let dominant = if m > 0 {
        let mean = total / m as f64;
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dev = max - mean;
        if dev > 1.0 {
            dev.ln()
        } else {
            0.0
        }
    } else {
        0.0
    };
    ActorMeasures {
        ego_density: if n >= 2.0 {
            2.0 * m as f64 / (n * (n - 1.0))
        } else {
            0.0
        },
        ego_neighbors: e.ego_degree() as f64,
        dominant_edges: dominant,
        ego_weight: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, EdgeRecord, EgoOrder};

    fn ego(edges: &[(&str, &str, f64)], ego: &str) -> EgoGraph {
        let recs: Vec<_> = edges
            .iter()
            .map(|&(a, b, w)| EdgeRecord::new(a, b, w))
            .collect();
        EgoGraph::new(build_graph(&recs).unwrap(), ego, EgoOrder::Second).unwrap()
    }

    fn star(k: usize) -> EgoGraph {
        let leaves: Vec<String> = (0..k).map(|i| format!("l{i}")).collect();
        let edges: Vec<_> = leaves.iter().map(|l| ("c", l.as_str(), 1.0)).collect();
        ego(&edges, "c")
    }

    fn complete(n: usize) -> EgoGraph {
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((ids[i].as_str(), ids[j].as_str(), 1.0));
            }
        }
        ego(&edges, "v0")
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn star_centralities() {
        let c = centralities(&star(4));
        assert!(close(c.betweenness, 1.0));
        assert!(close(c.degree, 1.0));
        assert!(close(c.closeness, 1.0));
        assert!(close(c.eigenvector, 1.0));
    }

    #[test]
    fn complete_centralities() {
        let c = centralities(&complete(4));
        assert!(close(c.betweenness, 0.0));
        assert!(close(c.degree, 1.0));
        assert!(close(c.eigenvector, 1.0));
    }

    #[test]
    fn path_closeness_and_nodal() {
        let mid = ego(&[("a", "b", 1.0), ("b", "c", 1.0)], "b");
        assert!(close(centralities(&mid).closeness, 1.0));
        let end = ego(&[("a", "b", 1.0), ("b", "c", 1.0)], "a");
        assert!(close(nodal_efficiency(&end), 0.75));
    }

    #[test]
    fn singleton_is_all_zero() {
        let g = WeightedGraph::with_nodes(["x"]);
        let e = EgoGraph::new(g, "x", EgoOrder::First).unwrap();
        assert_eq!(centralities(&e), Centralities::default());
        assert_eq!(global_efficiency(&e), 0.0);
        assert_eq!(nodal_efficiency(&e), 0.0);
        assert_eq!(local_efficiency(&e), 0.0);
    }

    #[test]
    fn efficiencies() {
        assert!(close(global_efficiency(&complete(5)), 1.0));
        assert!(close(global_efficiency(&star(3)), 0.75));
        let pair = EgoGraph::new(WeightedGraph::with_nodes(["a", "b"]), "a", EgoOrder::First).unwrap();
        assert_eq!(global_efficiency(&pair), 0.0);
        assert_eq!(nodal_efficiency(&pair), 0.0);
        assert!(close(local_efficiency(&star(4)), 0.0));
        assert!(close(local_efficiency(&complete(4)), 1.0));
        assert!(close(nodal_efficiency(&star(6)), 1.0));
    }

    #[test]
    fn disconnected_closeness_is_scaled() {
        // ego a - b, and an unreachable c - d
        let mut g = build_graph(&[EdgeRecord::new("a", "b", 1.0), EdgeRecord::new("c", "d", 1.0)]).unwrap();
        g = g.filter_edges(|_, _, _| true);
        let e = EgoGraph::new(g, "a", EgoOrder::First).unwrap();
        let c = centralities(&e);
        // reachable 1 of 3, distance 1: (1/1) * (1/3)
        assert!(close(c.closeness, 1.0 / 3.0));
        // eigenvector restricted to the ego's own component
        assert!(close(c.eigenvector, 1.0));
    }

    #[test]
    fn transitivity_values() {
        let tri = ego(&[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)], "a");
        assert_eq!(transitivities(&tri), Transitivities { global: 1.0, local: 1.0 });
        assert_eq!(transitivities(&star(4)), Transitivities { global: 0.0, local: 0.0 });
        assert_eq!(triangle_count(complete(4).graph()), 4);
    }

    #[test]
    fn actor_values() {
        let tri = ego(&[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)], "a");
        assert!(close(actor_measures(&tri).ego_density, 1.0));
        let s = actor_measures(&star(4));
        assert!(close(s.ego_density, 0.4));
        assert_eq!(s.ego_neighbors, 4.0);
        assert!(close(s.ego_weight, 4.0));
        assert_eq!(s.dominant_edges, 0.0);
        let w = ego(&[("a", "b", 1.0), ("a", "c", 2.0), ("a", "d", 5.0)], "a");
        assert!(close(actor_measures(&w).dominant_edges, (7.0f64 / 3.0).ln()));
    }

    #[test]
    fn raw_scale() {
        let c = centralities_scaled(&star(4), CentralityScale::Raw);
        assert_eq!(c.degree, 4.0);
        // C(4,2) leaf pairs all route through the centre
        assert!(close(c.betweenness, 6.0));
        assert!(close(c.closeness, 0.25));
    }
}
