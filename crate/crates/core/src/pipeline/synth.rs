use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph_with_nodes, EdgeRecord, WeightedGraph};
use crate::rng::stream;

/// Community graph with heavy-tailed integer weights, standing in for a
/// large call graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub nodes: usize,
    pub edges: usize,
    /// Nodes are split into this many contiguous blocks.
    pub communities: usize,
    /// Probability that an edge stays inside its first endpoint's block.
    pub intra: f64,
    /// Pareto shape of the interaction counts.
    pub weight_shape: f64,
    pub seed: u64,
}

impl ScaleSpec {
    /// 4,357 nodes and 259,110 edges.
    pub fn orange(seed: u64) -> ScaleSpec {
        ScaleSpec {
            nodes: 4357,
            edges: 259_110,
            communities: 30,
            intra: 0.8,
            weight_shape: 1.2,
            seed,
        }
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges as f64 / self.nodes as f64
    }
}

pub fn synthetic_graph(spec: &ScaleSpec) -> Result<WeightedGraph> {
    let n = spec.nodes;
    if n < 2 || spec.communities == 0 || spec.communities > n {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 nodes and 1..={n} communities"
        )));
    }
    // leave room so rejection sampling terminates quickly
    if spec.edges > n * (n - 1) / 4 {
        return Err(Error::InvalidParameter(format!(
            "{} edges is more than half of all pairs of {n} nodes",
            spec.edges
        )));
    }
    if !(0.0..=1.0).contains(&spec.intra) || !(spec.weight_shape > 0.0) {
        return Err(Error::InvalidParameter("intra must lie in [0, 1] and weight_shape be positive".into()));
    }
    let pareto = Pareto::new(1.0, spec.weight_shape).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let block = n.div_ceil(spec.communities);
    let mut rng = stream(spec.seed, 0x5ca1e);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(spec.edges);
    let mut records = Vec::with_capacity(spec.edges);
    let width = n.to_string().len();
    let id = |i: usize| format!("n{i:0width$}");
    while records.len() < spec.edges {
        let u = rng.random_range(0..n);
        let v = if rng.random_bool(spec.intra) {
            let lo = (u / block) * block;
            rng.random_range(lo..(lo + block).min(n))
        } else {
            rng.random_range(0..n)
        };
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            continue;
        }
        let w = pareto.sample(&mut rng).floor().min(1e6);
        records.push(EdgeRecord::new(id(u), id(v), w));
    }
    build_graph_with_nodes(&records, (0..n).map(id).collect())
}
