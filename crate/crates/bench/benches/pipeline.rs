use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use egonet_bench::{call_graph, corpus_points, corpus_records};
use egonet_core::cluster::{affinity_propagation, hierarchical, kmeans, ApConfig};
use egonet_core::eval::{dataset_entropy, fsfs_select};
use egonet_core::features::{compute_ego_records, minmax_normalize, CentralityScale};
use egonet_core::graph::disparity_filter;
use egonet_core::pipeline::full_matrix;
use egonet_core::select::{gap_statistic, GapClusterer};
use egonet_core::{BackboneParams, EgoOrder};

fn graph_stages(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    group.sample_size(10);
    for nodes in [500, 1000] {
        let g = call_graph(nodes, 1);
        group.bench_with_input(BenchmarkId::new("disparity_filter", nodes), &g, |b, g| {
            b.iter(|| disparity_filter(black_box(g), &BackboneParams::default()).unwrap())
        });
        let backbone = disparity_filter(&g, &BackboneParams::default()).unwrap();
        group.bench_with_input(BenchmarkId::new("ego_features", nodes), &backbone, |b, g| {
            b.iter(|| compute_ego_records(black_box(g), None, EgoOrder::Second, CentralityScale::Normalized).unwrap())
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let full = minmax_normalize(&full_matrix(&corpus_records(25, 2)));
    let mut group = c.benchmark_group("evaluation");
    group.bench_function("dataset_entropy_200", |b| b.iter(|| dataset_entropy(black_box(&full)).unwrap()));
    group.bench_function("fsfs_200", |b| b.iter(|| fsfs_select(black_box(&full), 2).unwrap()));
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let points = corpus_points(25, 3).rows;
    let mut group = c.benchmark_group("clustering");
    group.sample_size(20);
    group.bench_function("kmeans_k8", |b| b.iter(|| kmeans(black_box(&points), 8, 1, 10).unwrap()));
    group.bench_function("ward_k8", |b| b.iter(|| hierarchical(black_box(&points), 8).unwrap()));
    group.bench_function("affinity_propagation", |b| {
        b.iter(|| affinity_propagation(black_box(&points), &ApConfig::default()).unwrap())
    });
    group.bench_function("gap_ward_b20", |b| {
        b.iter(|| gap_statistic(black_box(&points), 10, 20, 4, GapClusterer::Hierarchical).unwrap())
    });
    group.finish();
}

criterion_group!(benches, graph_stages, evaluation, clustering);
criterion_main!(benches);
