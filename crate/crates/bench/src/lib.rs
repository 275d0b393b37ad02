//! Shared inputs for the benchmarks.

use egonet_core::cluster::ReducedMatrix;
use egonet_core::features::{compute_ego_records, CentralityScale, EgoRecord};
use egonet_core::pipeline::{full_matrix, reduce_subset, synthetic_graph, AnalysisParams, RunConfig, ScaleSpec};
use egonet_core::prototypes::{generate_corpus, CorpusSpec};
use egonet_core::{EgoOrder, SubsetId, WeightedGraph};

/// Call-graph-like synthetic network with the Orange mean degree scaled
/// down to `nodes` nodes.
pub fn call_graph(nodes: usize, seed: u64) -> WeightedGraph {
    let mut spec = ScaleSpec::orange(seed);
    let degree = spec.mean_degree();
    spec.nodes = nodes;
    spec.edges = (nodes as f64 * degree / 2.0) as usize;
    synthetic_graph(&spec).expect("valid scale spec")
}

/// Feature records of a generated prototype corpus.
pub fn corpus_records(per_label: usize, seed: u64) -> Vec<EgoRecord> {
    let corpus = generate_corpus(&CorpusSpec::new(per_label, 0.05, seed)).expect("valid corpus spec");
    let ids = corpus.ego_ids();
    compute_ego_records(&corpus.graph, Some(&ids), EgoOrder::Second, CentralityScale::Normalized).expect("corpus egos exist")
}

/// PCA-reduced subset-v points of a generated corpus.
pub fn corpus_points(per_label: usize, seed: u64) -> ReducedMatrix {
    let full = full_matrix(&corpus_records(per_label, seed));
    let params = AnalysisParams::from_config(&RunConfig::new(seed));
    reduce_subset(&full, SubsetId::V, &params).expect("subset v reduces").2
}
