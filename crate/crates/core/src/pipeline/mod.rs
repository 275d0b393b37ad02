//! Ingestion, temporal windows, end-to-end runs and reports.

mod analysis;
mod cache;
mod config;
mod ingest;
mod report;
mod run;
mod synth;
mod temporal;
mod window;

pub use analysis::{
    cluster_points, default_rules, detected_prototypes, ego_labels, fit_subset, fit_subset_k, full_matrix, label_clusters,
    reduce_subset, resolve_subset, select_k, AnalysisParams, ClusterLabel, KChoice, SubsetFit,
};
pub use cache::{Cache, KeyBuilder, StageKey};
pub use config::{InputSpec, KSelection, RunConfig, SelectionConfig, SubsetSelection, TemporalConfig, DEFAULT_K_MAX};
pub use ingest::{events_to_graph, ingest_events, parse_timestamp, sort_events, write_events, Event, InputFormat};
pub use report::{
    compare_report, read_assignments, write_assignments, write_compare_csv, write_labels, CompareRow, RunDiagnostics,
};
pub use run::{
    load_events, read_ego_list, run_pipeline, Pipeline, Prepared, RunOutput, RunSummary, SubsetRun, SubsetSummary,
};
pub use synth::{synthetic_graph, ScaleSpec};
pub use temporal::{
    assign_windows, occupancy_report, run_temporal, write_occupancy_csv, write_sequence_csv, EgoOccupancy,
    TemporalAssignment, TemporalRun,
};
pub use window::{locate, partition_events, window_graphs, Granularity, Window, WindowSpec};
