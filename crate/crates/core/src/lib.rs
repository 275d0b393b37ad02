//! Discovery of prototypical neighbourhood patterns in ego networks.
//!
//! The crate is organised along the processing pipeline:
//!
//! * [`graph`]: weighted undirected graphs, ego-graph extraction and
//!   disparity-filter backbone pruning.
//! * [`features`]: the thirteen per-ego network measures, feature subsets
//!   and min-max normalisation.
//! * [`eval`]: entropy, representation entropy and similarity-based
//!   feature selection.
//! * [`cluster`]: PCA plus k-means, Ward hierarchical clustering and
//!   affinity propagation.
//! * [`select`]: gap statistic, L-method, silhouette width.
//! * [`prototypes`]: cluster profiles, the C1–C8 rule table and synthetic
//!   prototype generators.
//! * [`pipeline`]: ingestion, temporal windows, end-to-end runs and reports.

pub mod cluster;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod prototypes;
pub mod select;
mod rng;

pub use cluster::{Algorithm, ClusteringResult, ReducedMatrix};
pub use error::{Error, Result};
pub use eval::SubsetScore;
pub use features::{Feature, FeatureMatrix, FeatureSubset, FeatureVector, SubsetId};
pub use graph::{BackboneParams, EgoGraph, EgoOrder, WeightedGraph};
pub use prototypes::{ClusterProfile, Label, Prototype, PrototypeLabel};
pub use select::{GapReport, KneeReport};
