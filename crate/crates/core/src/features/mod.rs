//! Per-ego feature vectors, the eight named feature subsets and min-max
//! normalisation.

mod measures;
mod paths;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use measures::{
    actor_measures, centralities, centralities_scaled, global_efficiency, local_efficiency,
    nodal_efficiency, transitivities, triangle_count, ActorMeasures, CentralityScale, Centralities,
    Transitivities,
};
pub use paths::PATH_TIE_TOLERANCE;

use crate::error::{Error, Result};
use crate::graph::{extract_ego_at, EgoGraph, EgoOrder, WeightedGraph};
use crate::io::format_sig;

/// The thirteen measures, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    #[serde(rename = "degree_c")]
    DegreeCentrality,
    #[serde(rename = "betweenness_c")]
    BetweennessCentrality,
    #[serde(rename = "closeness_c")]
    ClosenessCentrality,
    #[serde(rename = "eigenvector_c")]
    EigenvectorCentrality,
    #[serde(rename = "global_eff")]
    GlobalEfficiency,
    #[serde(rename = "local_eff")]
    LocalEfficiency,
    #[serde(rename = "nodal_eff")]
    NodalEfficiency,
    #[serde(rename = "global_trans")]
    GlobalTransitivity,
    #[serde(rename = "local_trans")]
    LocalTransitivity,
    EgoDensity,
    EgoNeighbors,
    DominantEdges,
    EgoWeight,
}

impl Feature {
    pub const COUNT: usize = 13;

    pub const ALL: [Feature; Feature::COUNT] = [
        Feature::DegreeCentrality,
        Feature::BetweennessCentrality,
        Feature::ClosenessCentrality,
        Feature::EigenvectorCentrality,
        Feature::GlobalEfficiency,
        Feature::LocalEfficiency,
        Feature::NodalEfficiency,
        Feature::GlobalTransitivity,
        Feature::LocalTransitivity,
        Feature::EgoDensity,
        Feature::EgoNeighbors,
        Feature::DominantEdges,
        Feature::EgoWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::DegreeCentrality => "degree_c",
            Feature::BetweennessCentrality => "betweenness_c",
            Feature::ClosenessCentrality => "closeness_c",
            Feature::EigenvectorCentrality => "eigenvector_c",
            Feature::GlobalEfficiency => "global_eff",
            Feature::LocalEfficiency => "local_eff",
            Feature::NodalEfficiency => "nodal_eff",
            Feature::GlobalTransitivity => "global_trans",
            Feature::LocalTransitivity => "local_trans",
            Feature::EgoDensity => "ego_density",
            Feature::EgoNeighbors => "ego_neighbors",
            Feature::DominantEdges => "dominant_edges",
            Feature::EgoWeight => "ego_weight",
        }
    }

    /// Position in canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All thirteen measures of one ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ego: String,
    pub values: [f64; Feature::COUNT],
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.values[f.index()]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        Feature::ALL.iter().map(move |f| (f.name(), self.get(*f)))
    }
}

/// Computes every measure for one ego graph.
pub fn ego_features(e: &EgoGraph, scale: CentralityScale) -> FeatureVector {
    let c = centralities_scaled(e, scale);
    let t = transitivities(e);
    let a = actor_measures(e);
    let values = [
        c.degree,
        c.betweenness,
        c.closeness,
        c.eigenvector,
        global_efficiency(e),
        local_efficiency(e),
        nodal_efficiency(e),
        t.global,
        t.local,
        a.ego_density,
        a.ego_neighbors,
        a.dominant_edges,
        a.ego_weight,
    ];
    debug_assert!(values.iter().all(|v| v.is_finite()));
    FeatureVector {
        ego: e.ego_id().to_string(),
        values,
    }
}

/// Structural facts about an ego graph used when profiling clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoSummary {
    pub ego: String,
    pub nodes: usize,
    pub edges: usize,
    pub triangles: usize,
    /// Number of edges among the ego's direct neighbours.
    pub neighbor_links: usize,
}

impl EgoSummary {
    pub fn of(e: &EgoGraph) -> EgoSummary {
        let g = e.graph();
        EgoSummary {
            ego: e.ego_id().to_string(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            triangles: triangle_count(g),
            neighbor_links: measures::linked_neighbor_pairs(g, e.ego()),
        }
    }

    pub fn density(&self) -> f64 {
        if self.nodes < 2 {
            0.0
        } else {
            2.0 * self.edges as f64 / (self.nodes as f64 * (self.nodes as f64 - 1.0))
        }
    }
}

/// Feature vector plus structural summary of one ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoRecord {
    pub features: FeatureVector,
    pub summary: EgoSummary,
}

/// Extracts the ego graph of every node in `egos` (all nodes when `None`)
/// and computes its features. Output is sorted by ego id whatever order the
/// work is executed in.
pub fn compute_ego_records(
    g: &WeightedGraph,
    egos: Option<&[String]>,
    order: EgoOrder,
    scale: CentralityScale,
) -> Result<Vec<EgoRecord>> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut idx: Vec<usize> = match egos {
        None => (0..g.node_count()).collect(),
        Some(list) => list
            .iter()
            .map(|id| g.index_of(id).ok_or_else(|| Error::UnknownNode(id.clone())))
            .collect::<Result<_>>()?,
    };
    idx.sort_unstable();
    idx.dedup();
    Ok(idx
        .par_iter()
        .map(|&v| {
            let e = extract_ego_at(g, v, order);
            EgoRecord {
                features: ego_features(&e, scale),
                summary: EgoSummary::of(&e),
            }
        })
        .collect())
}

/// Identifier of a feature subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetId {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
    Viii,
    Fsfs,
}

impl SubsetId {
    pub const NAMED: [SubsetId; 8] = [
        SubsetId::I,
        SubsetId::Ii,
        SubsetId::Iii,
        SubsetId::Iv,
        SubsetId::V,
        SubsetId::Vi,
        SubsetId::Vii,
        SubsetId::Viii,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubsetId::I => "i",
            SubsetId::Ii => "ii",
            SubsetId::Iii => "iii",
            SubsetId::Iv => "iv",
            SubsetId::V => "v",
            SubsetId::Vi => "vi",
            SubsetId::Vii => "vii",
            SubsetId::Viii => "viii",
            SubsetId::Fsfs => "fsfs",
        }
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubsetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SubsetId::NAMED
            .into_iter()
            .chain([SubsetId::Fsfs])
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown feature subset `{s}`")))
    }
}

/// A named selection of features, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub id: SubsetId,
    pub members: Vec<Feature>,
}

impl FeatureSubset {
    /// One of the eight predefined subsets. Panics for [`SubsetId::Fsfs`],
    /// whose members depend on data; use [`FeatureSubset::custom`].
    pub fn named(id: SubsetId) -> FeatureSubset {
        use Feature::*;
        let centrality = [
            DegreeCentrality,
            BetweennessCentrality,
            ClosenessCentrality,
            EigenvectorCentrality,
        ];
        let efficiency = [GlobalEfficiency, LocalEfficiency, NodalEfficiency];
        let transitivity = [GlobalTransitivity, LocalTransitivity];
        let actor = [EgoDensity, EgoNeighbors, DominantEdges, EgoWeight];
        let members: Vec<Feature> = match id {
            SubsetId::I => centrality.to_vec(),
            SubsetId::Ii => efficiency.to_vec(),
            SubsetId::Iii => transitivity.to_vec(),
            SubsetId::Iv => [&centrality[..], &efficiency[..]].concat(),
            SubsetId::V => [&centrality[..], &transitivity[..]].concat(),
            SubsetId::Vi => [&efficiency[..], &transitivity[..]].concat(),
            SubsetId::Vii => actor.to_vec(),
            SubsetId::Viii => Feature::ALL.to_vec(),
            SubsetId::Fsfs => panic!("the fsfs subset is selected from data"),
        };
        FeatureSubset { id, members }
    }

    pub fn custom(id: SubsetId, members: impl IntoIterator<Item = Feature>) -> Result<FeatureSubset> {
        let mut members: Vec<Feature> = members.into_iter().collect();
        members.sort();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidParameter("feature subset has no members".into()));
        }
        Ok(FeatureSubset { id, members })
    }

    pub fn all() -> FeatureSubset {
        FeatureSubset::named(SubsetId::Viii)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Rows are egos (sorted by id), columns are the subset's features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub egos: Vec<String>,
    pub subset: FeatureSubset,
    pub values: DMatrix<f64>,
}

impl FeatureMatrix {
    /// Restricts full feature vectors to `subset`, sorting rows by ego id.
    pub fn from_vectors(vectors: &[FeatureVector], subset: &FeatureSubset) -> FeatureMatrix {
        let mut order: Vec<&FeatureVector> = vectors.iter().collect();
        order.sort_by(|a, b| a.ego.cmp(&b.ego));
        let values = DMatrix::from_fn(order.len(), subset.len(), |r, c| {
            order[r].get(subset.members[c])
        });
        FeatureMatrix {
            egos: order.iter().map(|v| v.ego.clone()).collect(),
            subset: subset.clone(),
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Same rows restricted to `subset`, whose members must all be columns
    /// of this matrix.
    pub fn select(&self, subset: &FeatureSubset) -> Result<FeatureMatrix> {
        let cols: Vec<usize> = subset
            .members
            .iter()
            .map(|f| {
                self.subset.members.iter().position(|g| g == f).ok_or_else(|| {
                    Error::InvalidParameter(format!("feature {f} is not a column of the matrix"))
                })
            })
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(self.nrows(), cols.len(), |r, c| self.values[(r, cols[c])]);
        Ok(FeatureMatrix {
            egos: self.egos.clone(),
            subset: subset.clone(),
            values,
        })
    }

    /// CSV with header `ego,<feature names>` and 12 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["ego".to_string()];
        header.extend(self.subset.members.iter().map(|f| f.name().to_string()));
        w.write_record(&header)?;
        for (r, ego) in self.egos.iter().enumerate() {
            let mut row = vec![ego.clone()];
            row.extend((0..self.ncols()).map(|c| format_sig(self.values[(r, c)], 12)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a feature CSV. The subset id is recovered when the columns
    /// match a predefined subset and is `fsfs` otherwise.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let mut reader = csv::Reader::from_path(path)?;
        let header = reader.headers()?.clone();
        let perr = |line: usize, message: String| Error::Parse {
            path: display.clone(),
            line,
            message,
        };
        if header.get(0) != Some("ego") || header.len() < 2 {
            return Err(perr(1, "expected header `ego,<feature names...>`".into()));
        }
        let members: Vec<Feature> = header
            .iter()
            .skip(1)
            .map(|h| Feature::from_name(h).ok_or_else(|| perr(1, format!("unknown feature `{h}`"))))
            .collect::<Result<_>>()?;
        let id = SubsetId::NAMED
            .into_iter()
            .find(|&id| FeatureSubset::named(id).members == members)
            .unwrap_or(SubsetId::Fsfs);
        let subset = FeatureSubset { id, members };
        let mut egos = Vec::new();
        let mut data = Vec::new();
        for row in reader.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != header.len() {
                return Err(perr(line, format!("expected {} fields", header.len())));
            }
            egos.push(row[0].to_string());
            for field in row.iter().skip(1) {
                data.push(field.parse::<f64>().map_err(|_| perr(line, format!("bad number `{field}`")))?);
            }
        }
        let values = DMatrix::from_row_slice(egos.len(), subset.len(), &data);
        Ok(FeatureMatrix { egos, subset, values })
    }
}

/// Computes `subset` for every node of `g` (each treated as the ego),
/// without normalisation.
pub fn feature_matrix(g: &WeightedGraph, subset: &FeatureSubset, order: EgoOrder) -> Result<FeatureMatrix> {
    let records = compute_ego_records(g, None, order, CentralityScale::Normalized)?;
    let vectors: Vec<FeatureVector> = records.into_iter().map(|r| r.features).collect();
    Ok(FeatureMatrix::from_vectors(&vectors, subset))
}

/// Per-column min-max scaling fitted on one matrix and reusable on others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(values: &DMatrix<f64>) -> MinMaxScaler {
        let (mut min, mut max) = (Vec::new(), Vec::new());
        for col in values.column_iter() {
            min.push(col.iter().copied().fold(f64::INFINITY, f64::min));
            max.push(col.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        MinMaxScaler { min, max }
    }

    /// `(v - min) / (max - min)` per column, clamped to [0, 1]; constant
    /// columns map to 0.
    pub fn scale(&self, c: usize, v: f64) -> f64 {
        let range = self.max[c] - self.min[c];
        if range > 0.0 {
            ((v - self.min[c]) / range).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn transform(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(values.nrows(), values.ncols(), |r, c| self.scale(c, values[(r, c)]))
    }
}

/// Min-max normalises every column to [0, 1].
pub fn minmax_normalize(m: &FeatureMatrix) -> FeatureMatrix {
    let scaler = MinMaxScaler::fit(&m.values);
    FeatureMatrix {
        egos: m.egos.clone(),
        subset: m.subset.clone(),
        values: scaler.transform(&m.values),
    }
}
