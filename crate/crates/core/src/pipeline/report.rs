use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::{detected_prototypes, fit_subset, label_clusters, AnalysisParams, ClusterLabel, SubsetFit};
use crate::cluster::{Algorithm, Diagnostics};
use crate::error::{Error, Result};
use crate::features::{EgoRecord, FeatureMatrix, SubsetId};
use crate::io::format_sig;
use crate::prototypes::{Prototype, RuleTable};

/// `ego,cluster`.
pub fn write_assignments(path: &Path, egos: &[String], assignments: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ego", "cluster"])?;
    for (e, c) in egos.iter().zip(assignments) {
        w.write_record([e.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `ego,cluster` rows.
pub fn read_assignments(path: &Path) -> Result<(Vec<String>, Vec<usize>)> {
    let parsed = crate::io::read_rows(path, &["ego", "cluster"], true, |row| {
        let c = row[1]
            .parse::<usize>()
            .map_err(|_| format!("cluster `{}` is not a non-negative integer", &row[1]))?;
        Ok((row[0].to_string(), c))
    })?;
    Ok(parsed.records.into_iter().unzip())
}

/// `cluster,label,confidence,evidence`.
pub fn write_labels(path: &Path, labels: &[ClusterLabel]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cluster", "label", "confidence", "evidence"])?;
    for l in labels {
        w.write_record([
            l.cluster.to_string(),
            l.label.label.to_string(),
            format_sig(l.label.confidence, 12),
            l.label.evidence_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run summary written next to the assignment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub subset: SubsetId,
    pub features: Vec<String>,
    pub algorithm: Algorithm,
    pub k: usize,
    pub seed: u64,
    pub converged: bool,
    pub silhouette: Option<f64>,
    pub cluster_sizes: Vec<usize>,
    pub pca_dims: usize,
    pub explained_variance_ratio: Vec<f64>,
    /// Centroids or exemplars in PCA coordinates.
    pub centers: Vec<Vec<f64>>,
    pub exemplars: Option<Vec<String>>,
    pub details: Diagnostics,
}

impl RunDiagnostics {
    pub fn of(fit: &SubsetFit) -> RunDiagnostics {
        let c = &fit.clustering;
        RunDiagnostics {
            subset: fit.subset.id,
            features: fit.subset.members.iter().map(|f| f.name().to_string()).collect(),
            algorithm: c.algorithm,
            k: c.k,
            seed: c.seed,
            converged: c.converged,
            silhouette: fit.silhouette,
            cluster_sizes: c.cluster_sizes(),
            pca_dims: fit.pca.dims(),
            explained_variance_ratio: fit.pca.explained_variance_ratio.clone(),
            centers: c.centers.clone(),
            exemplars: c
                .exemplars
                .as_ref()
                .map(|ex| ex.iter().map(|&i| fit.egos[i].clone()).collect()),
            details: c.diagnostics.clone(),
        }
    }
}

/// One cell of the subset × algorithm comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub subset: SubsetId,
    pub features: Vec<String>,
    pub algorithm: Algorithm,
    pub k: usize,
    /// Distinct prototypes named by the cluster labels.
    pub detected: Vec<Prototype>,
    pub unmatched_clusters: usize,
    pub entropy: f64,
    pub representation_entropy: f64,
    pub silhouette: Option<f64>,
}

impl CompareRow {
    pub fn new(fit: &SubsetFit, labels: &[ClusterLabel]) -> CompareRow {
        CompareRow {
            subset: fit.subset.id,
            features: fit.subset.members.iter().map(|f| f.name().to_string()).collect(),
            algorithm: fit.clustering.algorithm,
            k: fit.clustering.k,
            detected: detected_prototypes(labels),
            unmatched_clusters: labels.iter().filter(|l| l.label.label.prototype().is_none()).count(),
            entropy: fit.score.entropy,
            representation_entropy: fit.score.representation_entropy,
            silhouette: fit.silhouette,
        }
    }
}

/// Fits every subset × algorithm cell, subsets outermost.
pub fn compare_report(
    full: &FeatureMatrix,
    records: &[EgoRecord],
    subsets: &[SubsetId],
    algorithms: &[Algorithm],
    params: &AnalysisParams,
    rules: &RuleTable,
) -> Result<Vec<CompareRow>> {
    if subsets.is_empty() || algorithms.is_empty() {
        return Err(Error::InvalidParameter(
            "comparison needs at least one subset and one algorithm".into(),
        ));
    }
    let mut rows = Vec::new();
    for &s in subsets {
        for &a in algorithms {
            let fit = fit_subset(full, s, &params.with_algorithm(a))?;
            let labels = label_clusters(&fit.egos, &fit.clustering, records, rules)?;
            rows.push(CompareRow::new(&fit, &labels));
        }
    }
    Ok(rows)
}

/// `subset,algorithm,k,detected,unmatched_clusters,entropy,representation_entropy,silhouette`,
/// detected prototypes joined by `;`.
pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "subset",
        "algorithm",
        "k",
        "detected",
        "unmatched_clusters",
        "entropy",
        "representation_entropy",
        "silhouette",
    ])?;
    for r in rows {
        let detected: Vec<&str> = r.detected.iter().map(|p| p.as_str()).collect();
        w.write_record([
            r.subset.to_string(),
            r.algorithm.to_string(),
            r.k.to_string(),
            detected.join(";"),
            r.unmatched_clusters.to_string(),
            format_sig(r.entropy, 12),
            format_sig(r.representation_entropy, 12),
            r.silhouette.map(|s| format_sig(s, 12)).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
