use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::{KSelection, RunConfig, SelectionConfig};
use crate::cluster::{
    affinity_propagation_capped, hierarchical, kmeans_with, pca_reduce, Algorithm, ApConfig, ClusteringResult,
    KMeansConfig, ReducedMatrix,
};
use crate::error::{Error, Result};
use crate::eval::{fsfs_select, score_subset, SubsetScore};
use crate::features::{EgoRecord, FeatureMatrix, FeatureSubset, FeatureVector, MinMaxScaler, SubsetId};
use crate::prototypes::{label_cluster, profile_cluster, CorpusReference, Label, Prototype, PrototypeLabel, RuleTable};
use crate::select::{gap_statistic_with, knee_curve, l_method, silhouette, GapClusterer, GapReport, KneeReport};

/// Settings of the post-feature part of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub algorithm: Algorithm,
    pub variance_target: f64,
    pub selection: SelectionConfig,
    pub kmeans: KMeansConfig,
    pub ap: ApConfig,
    pub fsfs_k: usize,
    pub seed: u64,
}

impl AnalysisParams {
    pub fn from_config(cfg: &RunConfig) -> AnalysisParams {
        AnalysisParams {
            algorithm: cfg.algorithm,
            variance_target: cfg.variance_target,
            selection: cfg.selection,
            kmeans: cfg.kmeans,
            ap: cfg.ap,
            fsfs_k: cfg.fsfs_k,
            seed: cfg.seed,
        }
    }

    pub fn with_algorithm(&self, algorithm: Algorithm) -> AnalysisParams {
        AnalysisParams {
            algorithm,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum KChoice {
    Gap(GapReport),
    LMethod(KneeReport),
}

impl KChoice {
    pub fn chosen_k(&self) -> usize {
        match self {
            KChoice::Gap(r) => r.chosen_k,
            KChoice::LMethod(r) => r.chosen_k,
        }
    }
}

/// Everything fitted on one feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFit {
    pub subset: FeatureSubset,
    pub egos: Vec<String>,
    pub score: SubsetScore,
    /// Fitted on the raw subset columns.
    pub scaler: MinMaxScaler,
    pub pca: ReducedMatrix,
    /// Absent when k was given or chosen by affinity propagation.
    pub selection: Option<KChoice>,
    pub clustering: ClusteringResult,
    pub silhouette: Option<f64>,
}

impl SubsetFit {
    /// Cluster of a raw full feature vector, through the fitted scaling and
    /// projection.
    pub fn assign(&self, v: &FeatureVector) -> usize {
        let x: Vec<f64> = self
            .subset
            .members
            .iter()
            .enumerate()
            .map(|(c, &f)| self.scaler.scale(c, v.get(f)))
            .collect();
        self.clustering.nearest_center(&self.pca.project(&x))
    }
}

/// Members of subset `id`. The FSFS subset is selected on the normalised
/// full matrix.
pub fn resolve_subset(full: &FeatureMatrix, id: SubsetId, fsfs_k: usize) -> Result<FeatureSubset> {
    match id {
        SubsetId::Fsfs => {
            let all = full.select(&FeatureSubset::all())?;
            let norm = MinMaxScaler::fit(&all.values).transform(&all.values);
            fsfs_select(
                &FeatureMatrix {
                    values: norm,
                    ..all
                },
                fsfs_k,
            )
        }
        id => Ok(FeatureSubset::named(id)),
    }
}

/// Number of clusters by the configured method. The gap statistic clusters
/// its references with k-means for k-means runs and with Ward otherwise.
pub fn select_k(points: &DMatrix<f64>, p: &AnalysisParams) -> Result<KChoice> {
    let s = &p.selection;
    match s.method {
        KSelection::Gap => {
            let clusterer = match p.algorithm {
                Algorithm::KMeans => GapClusterer::KMeans {
                    restarts: p.kmeans.restarts,
                },
                _ => GapClusterer::Hierarchical,
            };
            gap_statistic_with(points, s.k_max, s.b, p.seed, clusterer, s.sd_rule).map(KChoice::Gap)
        }
        KSelection::LMethod => l_method(&knee_curve(points, s.k_max, s.knee_metric)?).map(KChoice::LMethod),
    }
}

/// Clusters `points` into `k` groups. Affinity propagation chooses its own
/// count and only honours `k_max`.
pub fn cluster_points(points: &DMatrix<f64>, k: usize, p: &AnalysisParams) -> Result<ClusteringResult> {
    match p.algorithm {
        Algorithm::KMeans => kmeans_with(points, k, p.seed, &p.kmeans),
        Algorithm::Hierarchical => hierarchical(points, k),
        Algorithm::AffinityPropagation => affinity_propagation_capped(points, &p.ap, p.selection.k_max),
    }
}

/// Normalised subset columns, their scaler and PCA projection.
pub fn reduce_subset(full: &FeatureMatrix, id: SubsetId, p: &AnalysisParams) -> Result<(FeatureMatrix, MinMaxScaler, ReducedMatrix)> {
    let subset = resolve_subset(full, id, p.fsfs_k)?;
    let raw = full.select(&subset)?;
    let scaler = MinMaxScaler::fit(&raw.values);
    let normalized = FeatureMatrix {
        values: scaler.transform(&raw.values),
        ..raw
    };
    let pca = pca_reduce(&normalized.values, p.variance_target)?;
    Ok((normalized, scaler, pca))
}

/// Normalise, score, reduce, pick k and cluster one subset of `full`.
pub fn fit_subset(full: &FeatureMatrix, id: SubsetId, p: &AnalysisParams) -> Result<SubsetFit> {
    fit_subset_k(full, id, p, None)
}

/// As [`fit_subset`] with an optional fixed k, which skips selection.
/// Affinity propagation ignores `k`.
pub fn fit_subset_k(full: &FeatureMatrix, id: SubsetId, p: &AnalysisParams, k: Option<usize>) -> Result<SubsetFit> {
    let (normalized, scaler, pca) = reduce_subset(full, id, p)?;
    let score = score_subset(&normalized)?;
    let selection = match (p.algorithm, k) {
        (Algorithm::AffinityPropagation, _) | (_, Some(_)) => None,
        _ => Some(select_k(&pca.rows, p)?),
    };
    let k = k.or(selection.as_ref().map(KChoice::chosen_k)).unwrap_or(1);
    let clustering = cluster_points(&pca.rows, k, p)?;
    let silhouette = if clustering.k >= 2 && clustering.k < pca.rows.nrows() {
        Some(silhouette(&pca.rows, &clustering.assignments)?)
    } else {
        None
    };
    Ok(SubsetFit {
        subset: normalized.subset,
        egos: normalized.egos,
        score,
        scaler,
        pca,
        selection,
        clustering,
        silhouette,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster: usize,
    pub size: usize,
    #[serde(flatten)]
    pub label: PrototypeLabel,
}

/// Default thresholds with medians taken from `records`.
pub fn default_rules(records: &[EgoRecord]) -> Result<RuleTable> {
    Ok(RuleTable::with_reference(CorpusReference::from_records(records)?))
}

/// Profiles and labels every cluster. `records` must cover the fitted egos.
pub fn label_clusters(fit_egos: &[String], c: &ClusteringResult, records: &[EgoRecord], rules: &RuleTable) -> Result<Vec<ClusterLabel>> {
    let by_ego: BTreeMap<&str, &EgoRecord> = records.iter().map(|r| (r.features.ego.as_str(), r)).collect();
    c.members()
        .into_iter()
        .enumerate()
        .map(|(cluster, rows)| {
            let members: Vec<&EgoRecord> = rows
                .iter()
                .map(|&r| {
                    by_ego
                        .get(fit_egos[r].as_str())
                        .copied()
                        .ok_or_else(|| Error::UnknownNode(fit_egos[r].clone()))
                })
                .collect::<Result<_>>()?;
            Ok(ClusterLabel {
                cluster,
                size: members.len(),
                label: label_cluster(&profile_cluster(&members)?, rules),
            })
        })
        .collect()
}

/// Distinct prototypes among the cluster labels, in C1..C8 order.
pub fn detected_prototypes(labels: &[ClusterLabel]) -> Vec<Prototype> {
    let mut out: Vec<Prototype> = labels.iter().filter_map(|l| l.label.label.prototype()).collect();
    out.sort();
    out.dedup();
    out
}

/// Label of every fitted ego, row-aligned with `fit.egos`.
pub fn ego_labels(fit: &SubsetFit, labels: &[ClusterLabel]) -> Vec<Label> {
    fit.clustering
        .assignments
        .iter()
        .map(|&c| labels[c].label.label)
        .collect()
}

pub fn full_matrix(records: &[EgoRecord]) -> FeatureMatrix {
    let vectors: Vec<FeatureVector> = records.iter().map(|r| r.features.clone()).collect();
    FeatureMatrix::from_vectors(&vectors, &FeatureSubset::all())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_ego_records, CentralityScale};
    use crate::graph::EgoOrder;
    use crate::prototypes::{generate_corpus, CorpusSpec};
    use crate::select::adjusted_rand_index;

    fn params(algorithm: Algorithm) -> AnalysisParams {
        AnalysisParams::from_config(&RunConfig::new(3)).with_algorithm(algorithm)
    }

    #[test]
    fn corpus_round_trip() {
        let c = generate_corpus(&CorpusSpec::new(25, 0.05, 3)).unwrap();
        let ids = c.ego_ids();
        let records = compute_ego_records(&c.graph, Some(&ids), EgoOrder::Second, CentralityScale::Normalized).unwrap();
        let full = full_matrix(&records);
        let p = params(Algorithm::Hierarchical);
        let fit = fit_subset(&full, SubsetId::V, &p).unwrap();
        assert_eq!(fit.egos, ids);
        let truth: Vec<usize> = c.truth().iter().map(|p| p.index()).collect();
        let ari = adjusted_rand_index(&truth, &fit.clustering.assignments);
        assert!(ari > 0.8, "k {} ari {ari}", fit.clustering.k);
        let labels = label_clusters(&fit.egos, &fit.clustering, &records, &default_rules(&records).unwrap()).unwrap();
        assert_eq!(labels.len(), fit.clustering.k);
        assert!(detected_prototypes(&labels).len() >= 7);
        // refitting a member's own vector lands in its own cluster
        assert_eq!(fit.assign(&records[0].features), fit.clustering.assignments[0]);
    }

    #[test]
    fn ap_respects_cap_and_fsfs_resolves() {
        let c = generate_corpus(&CorpusSpec::new(6, 0.05, 1)).unwrap();
        let ids = c.ego_ids();
        let records = compute_ego_records(&c.graph, Some(&ids), EgoOrder::Second, CentralityScale::Normalized).unwrap();
        let full = full_matrix(&records);
        let mut p = params(Algorithm::AffinityPropagation);
        p.selection.k_max = 3;
        let fit = fit_subset(&full, SubsetId::Viii, &p).unwrap();
        assert!(fit.clustering.k <= 3);
        let fs = resolve_subset(&full, SubsetId::Fsfs, 2).unwrap();
        assert_eq!(fs.id, SubsetId::Fsfs);
        assert!(!fs.is_empty() && fs.len() < 13);
    }
}
