//! Weighted undirected interaction graphs and ego-graph extraction.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(src, dst, weight)` observation. Several records for the same
/// unordered pair are merged by summing their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub weight: f64,
}

impl EdgeRecord {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, weight: f64) -> Self {
        EdgeRecord {
            src: src.into(),
            dst: dst.into(),
            weight,
        }
    }
}

/// Undirected weighted simple graph.
///
/// Node identifiers are opaque strings; dense indices follow the sorted
/// identifier order, so two graphs with the same content are equal
/// regardless of how they were built. Adjacency lists are sorted by
/// neighbour index.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(usize, f64)>>,
    edge_count: usize,
}

impl WeightedGraph {
    /// Builds a graph from already validated index-space edges.
    /// `ids` must be sorted and unique; each pair must appear once.
    fn from_parts(ids: Vec<String>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        let mut adj = vec![Vec::new(); ids.len()];
        let mut edge_count = 0;
        for (a, b, w) in edges {
            debug_assert!(a != b && w > 0.0);
            adj[a].push((b, w));
            adj[b].push((a, w));
            edge_count += 1;
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        WeightedGraph {
            ids,
            index,
            adj,
            edge_count,
        }
    }

    /// Graph with the given nodes and no edges.
    pub fn with_nodes<I, S>(nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ids: Vec<String> = nodes.into_iter().map(Into::into).collect();
        ids.sort();
        ids.dedup();
        Self::from_parts(ids, std::iter::empty())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let list = &self.adj[i];
        list.binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j).is_some()
    }

    /// Edges as `(i, j, w)` with `i < j`, in lexicographic index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Subgraph induced on `nodes` (parent indices, any order). Returns the
    /// subgraph and the parent index of every subgraph node.
    pub fn induced(&self, nodes: &[usize]) -> (WeightedGraph, Vec<usize>) {
        let mut keep: Vec<usize> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut local = HashMap::with_capacity(keep.len());
        for (li, &pi) in keep.iter().enumerate() {
            local.insert(pi, li);
        }
        let ids = keep.iter().map(|&p| self.ids[p].clone()).collect();
        let mut edges = Vec::new();
        for (li, &pi) in keep.iter().enumerate() {
            for &(pj, w) in &self.adj[pi] {
                if pj > pi {
                    if let Some(&lj) = local.get(&pj) {
                        edges.push((li, lj, w));
                    }
                }
            }
        }
        (Self::from_parts(ids, edges), keep)
    }

    /// Copy of the graph with only the edges for which `keep` is true. The
    /// node set is unchanged.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> WeightedGraph {
        let edges: Vec<_> = self.edges().filter(|&(i, j, w)| keep(i, j, w)).collect();
        Self::from_parts(self.ids.clone(), edges)
    }

    /// Disjoint union. Node identifiers must not collide.
    pub fn disjoint_union(graphs: &[&WeightedGraph]) -> Result<WeightedGraph> {
        let mut records = Vec::new();
        let mut nodes = Vec::new();
        for g in graphs {
            nodes.extend(g.ids.iter().cloned());
            records.extend(
                g.edges()
                    .map(|(i, j, w)| EdgeRecord::new(g.id(i), g.id(j), w)),
            );
        }
        let before = nodes.len();
        nodes.sort();
        nodes.dedup();
        if nodes.len() != before {
            return Err(Error::InvalidParameter(
                "disjoint union of graphs with shared node identifiers".into(),
            ));
        }
        build_graph_with_nodes(&records, nodes)
    }

    /// Edge list as records with `src < dst` lexicographically.
    pub fn to_records(&self) -> Vec<EdgeRecord> {
        self.edges()
            .map(|(i, j, w)| EdgeRecord::new(self.id(i), self.id(j), w))
            .collect()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<WeightedGraph> {
        let records = crate::io::read_edge_list(path.as_ref(), true)?.records;
        build_graph(&records)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_edge_list(path.as_ref(), &self.to_records())
    }
}

/// Builds a graph from edge records, summing duplicate pairs.
///
/// Weights of a duplicated pair are summed in sorted order so that the
/// result does not depend on record order.
pub fn build_graph(records: &[EdgeRecord]) -> Result<WeightedGraph> {
    build_graph_with_nodes(records, Vec::new())
}

/// Like [`build_graph`], additionally including `nodes` (which may be
/// isolated).
pub fn build_graph_with_nodes(records: &[EdgeRecord], nodes: Vec<String>) -> Result<WeightedGraph> {
    let mut pairs: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for (index, r) in records.iter().enumerate() {
        if r.src.is_empty() || r.dst.is_empty() {
            return Err(Error::EmptyNodeId { index });
        }
        if r.src == r.dst {
            return Err(Error::SelfLoop {
                index,
                node: r.src.clone(),
            });
        }
        if !(r.weight > 0.0) || !r.weight.is_finite() {
            return Err(Error::NonPositiveWeight {
                index,
                weight: r.weight,
            });
        }
        let key = if r.src < r.dst {
            (r.src.as_str(), r.dst.as_str())
        } else {
            (r.dst.as_str(), r.src.as_str())
        };
        pairs.entry(key).or_default().push(r.weight);
    }
    let mut ids = nodes;
    for &(a, b) in pairs.keys() {
        ids.push(a.to_string());
        ids.push(b.to_string());
    }
    ids.sort();
    ids.dedup();
    let pos = |id: &str| ids.binary_search_by(|x| x.as_str().cmp(id)).unwrap();
    let edges: Vec<_> = pairs
        .iter()
        .map(|(&(a, b), ws)| {
            let mut ws = ws.clone();
            ws.sort_by(f64::total_cmp);
            (pos(a), pos(b), ws.iter().sum())
        })
        .collect();
    Ok(WeightedGraph::from_parts(ids, edges))
}

/// Neighbourhood radius of an ego graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "u8", into = "u8")]
pub enum EgoOrder {
    First,
    #[default]
    Second,
}

impl EgoOrder {
    pub fn hops(self) -> usize {
        match self {
            EgoOrder::First => 1,
            EgoOrder::Second => 2,
        }
    }
}

impl TryFrom<u8> for EgoOrder {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(EgoOrder::First),
            2 => Ok(EgoOrder::Second),
            other => Err(format!("ego order must be 1 or 2, got {other}")),
        }
    }
}

impl From<EgoOrder> for u8 {
    fn from(o: EgoOrder) -> u8 {
        o.hops() as u8
    }
}

impl fmt::Display for EgoOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hops())
    }
}

/// Induced subgraph around a focal node.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoGraph {
    ego: usize,
    order: EgoOrder,
    graph: WeightedGraph,
}

impl EgoGraph {
    /// Wraps an arbitrary graph as an ego graph centred on `ego`.
    pub fn new(graph: WeightedGraph, ego: &str, order: EgoOrder) -> Result<EgoGraph> {
        let ego = graph
            .index_of(ego)
            .ok_or_else(|| Error::UnknownNode(ego.to_string()))?;
        Ok(EgoGraph { ego, order, graph })
    }

    /// Index of the ego within [`EgoGraph::graph`].
    pub fn ego(&self) -> usize {
        self.ego
    }

    pub fn ego_id(&self) -> &str {
        self.graph.id(self.ego)
    }

    pub fn order(&self) -> EgoOrder {
        self.order
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Direct neighbours of the ego. Because ego graphs are induced and
    /// always contain the whole first-order neighbourhood, this equals the
    /// ego's degree in the parent graph.
    pub fn ego_degree(&self) -> usize {
        self.graph.degree(self.ego)
    }
}

/// Induced subgraph on `v` and every node within `order` hops of it.
pub fn extract_ego(g: &WeightedGraph, v: &str, order: EgoOrder) -> Result<EgoGraph> {
    let root = g
        .index_of(v)
        .ok_or_else(|| Error::UnknownNode(v.to_string()))?;
    Ok(extract_ego_at(g, root, order))
}

pub(crate) fn extract_ego_at(g: &WeightedGraph, root: usize, order: EgoOrder) -> EgoGraph {
    let limit = order.hops();
    let mut depth = HashMap::new();
    depth.insert(root, 0usize);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let d = depth[&u];
        if d == limit {
            continue;
        }
        for &(v, _) in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(v) {
                e.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    let nodes: Vec<usize> = depth.into_keys().collect();
    let (graph, parents) = g.induced(&nodes);
    let ego = parents.binary_search(&root).unwrap();
    EgoGraph { ego, order, graph }
}

/// Rule deciding which endpoints' significance test an edge must pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KeepRule {
    /// Keep the edge if it is significant at either endpoint.
    #[default]
    EitherEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackboneParams {
    pub significance: f64,
    #[serde(default)]
    pub keep_rule: KeepRule,
}

impl Default for BackboneParams {
    fn default() -> Self {
        BackboneParams {
            significance: 0.05,
            keep_rule: KeepRule::EitherEndpoint,
        }
    }
}

impl BackboneParams {
    pub fn validate(&self) -> Result<()> {
        if self.significance > 0.0 && self.significance < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "backbone significance must lie in (0, 1), got {}",
                self.significance
            )))
        }
    }
}

/// Probability that an edge carrying `weight` out of `strength` at a node of
/// degree `degree` is at least this heavy under a uniform split of the
/// node's strength: `(1 - w/s)^(k-1)`.
pub fn disparity_alpha(weight: f64, strength: f64, degree: usize) -> f64 {
    let p = weight / strength;
    (1.0 - p).max(0.0).powi(degree as i32 - 1)
}

/// Multiscale backbone: keeps edges that are statistically significant
/// against a uniform distribution of weight at one of their endpoints.
/// Edges touching a degree-1 node are always kept; the node set is kept
/// unchanged, so isolated nodes may appear.
pub fn disparity_filter(g: &WeightedGraph, params: &BackboneParams) -> Result<WeightedGraph> {
    params.validate()?;
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let strength: Vec<f64> = (0..g.node_count()).map(|i| g.strength(i)).collect();
    let significant = |i: usize, w: f64| {
        let k = g.degree(i);
        k <= 1 || disparity_alpha(w, strength[i], k) < params.significance
    };
    Ok(g.filter_edges(|i, j, w| match params.keep_rule {
        KeepRule::EitherEndpoint => significant(i, w) || significant(j, w),
    }))
}
