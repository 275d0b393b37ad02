use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::analysis::{default_rules, fit_subset, full_matrix, label_clusters, AnalysisParams, ClusterLabel, SubsetFit};
use super::cache::{Cache, StageKey};
use super::config::{InputSpec, RunConfig};
use super::ingest::{events_to_graph, ingest_events, sort_events, Event};
use super::report::{write_assignments, write_labels, RunDiagnostics};
use crate::error::{Error, Result};
use crate::eval::SubsetScore;
use crate::features::{compute_ego_records, EgoRecord, SubsetId};
use crate::graph::{build_graph_with_nodes, disparity_filter, EdgeRecord, WeightedGraph};
use crate::io::{read_rows, write_json};
use crate::prototypes::RuleTable;

/// Reads and merges every input into one sorted event stream.
pub fn load_events(inputs: &[InputSpec], strict: bool) -> Result<Vec<Event>> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("no input files configured".into()));
    }
    let mut events = Vec::new();
    for input in inputs {
        let parsed = ingest_events(&input.path, input.format, strict)?;
        if !parsed.skipped.is_empty() {
            info!("{}: skipped {} malformed rows", input.path.display(), parsed.skipped.len());
        }
        events.extend(parsed.records);
    }
    sort_events(&mut events);
    Ok(events)
}

/// Reads the `ego` column of an ego-list CSV.
pub fn read_ego_list(path: &Path) -> Result<Vec<String>> {
    let parsed = read_rows(path, &["ego"], true, |row| {
        if row[0].is_empty() {
            Err("empty ego identifier".to_string())
        } else {
            Ok(row[0].to_string())
        }
    })?;
    if parsed.records.is_empty() {
        return Err(Error::EmptyInput(path.display().to_string()));
    }
    Ok(parsed.records)
}

/// Serialisable form of a graph, isolated nodes included.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphData {
    nodes: Vec<String>,
    edges: Vec<EdgeRecord>,
}

impl GraphData {
    fn of(g: &WeightedGraph) -> GraphData {
        GraphData {
            nodes: g.ids().to_vec(),
            edges: g.to_records(),
        }
    }

    fn into_graph(self) -> Result<WeightedGraph> {
        build_graph_with_nodes(&self.edges, self.nodes)
    }
}

/// Stage runner sharing a configuration and an on-disk cache.
pub struct Pipeline<'a> {
    cfg: &'a RunConfig,
    cache: Cache,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Pipeline<'a>> {
        cfg.validate()?;
        let cache = if cfg.cache {
            Cache::at(cfg.out.join(".cache"))
        } else {
            Cache::disabled()
        };
        Ok(Pipeline { cfg, cache })
    }

    pub fn config(&self) -> &RunConfig {
        self.cfg
    }

    fn inputs_key(&self) -> Result<StageKey> {
        let mut k = StageKey::root("inputs").json(&self.cfg.strict)?;
        for input in &self.cfg.inputs {
            k = k.json(&input.format)?.file(&input.path)?;
        }
        Ok(k.finish())
    }

    /// Interaction graph of all inputs, weights summed over events.
    pub fn build(&self) -> Result<(WeightedGraph, StageKey)> {
        let run = || -> Result<_> {
            let key = self.inputs_key()?;
            let data = self.cache.get_or_compute("graph", &key, || {
                let events = load_events(&self.cfg.inputs, self.cfg.strict)?;
                Ok(GraphData::of(&events_to_graph(&events)?))
            })?;
            Ok((data.into_graph()?, key))
        };
        run().map_err(|e| e.in_stage("build"))
    }

    /// Backbone of `g`, or `g` itself when pruning is off.
    pub fn prune(&self, g: WeightedGraph, key: &StageKey) -> Result<(WeightedGraph, StageKey)> {
        let run = || -> Result<_> {
            let key = key.child("prune").json(&self.cfg.backbone)?.finish();
            let Some(params) = self.cfg.backbone else {
                return Ok((g, key));
            };
            let data = self
                .cache
                .get_or_compute("backbone", &key, || Ok(GraphData::of(&disparity_filter(&g, &params)?)))?;
            Ok((data.into_graph()?, key))
        };
        run().map_err(|e| e.in_stage("prune"))
    }

    pub fn ego_list(&self) -> Result<Option<Vec<String>>> {
        self.cfg
            .egos
            .as_deref()
            .map(read_ego_list)
            .transpose()
            .map_err(|e| e.in_stage("egos"))
    }

    /// Feature vectors and summaries of the configured egos.
    pub fn records(&self, g: &WeightedGraph, key: &StageKey) -> Result<Vec<EgoRecord>> {
        let run = || -> Result<_> {
            let egos = self.ego_list()?;
            let key = key
                .child("features")
                .json(&egos)?
                .json(&self.cfg.ego_order)?
                .json(&self.cfg.centrality_scale)?
                .finish();
            self.cache.get_or_compute("features", &key, || {
                compute_ego_records(g, egos.as_deref(), self.cfg.ego_order, self.cfg.centrality_scale)
            })
        };
        run().map_err(|e| e.in_stage("features"))
    }

    /// Build, prune and featurise.
    pub fn prepare(&self) -> Result<Prepared> {
        let (graph, key) = self.build()?;
        let (backbone, key) = self.prune(graph.clone(), &key)?;
        let records = self.records(&backbone, &key)?;
        let rules = match self.cfg.rules {
            Some(r) => r,
            None => default_rules(&records).map_err(|e| e.in_stage("label"))?,
        };
        Ok(Prepared {
            graph,
            backbone,
            records,
            rules,
        })
    }

    pub fn fit(&self, prepared: &Prepared, subset: SubsetId) -> Result<SubsetRun> {
        let full = full_matrix(&prepared.records);
        let fit = fit_subset(&full, subset, &AnalysisParams::from_config(self.cfg)).map_err(|e| e.in_stage("cluster"))?;
        let labels = label_clusters(&fit.egos, &fit.clustering, &prepared.records, &prepared.rules)
            .map_err(|e| e.in_stage("label"))?;
        Ok(SubsetRun { fit, labels })
    }
}

pub struct Prepared {
    pub graph: WeightedGraph,
    pub backbone: WeightedGraph,
    pub records: Vec<EgoRecord>,
    pub rules: RuleTable,
}

pub struct SubsetRun {
    pub fit: SubsetFit,
    pub labels: Vec<ClusterLabel>,
}

impl SubsetRun {
    /// Writes `assignments.csv`, `labels.csv`, `diagnostics.json`,
    /// `selection.json` and `score.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_assignments(&dir.join("assignments.csv"), &self.fit.egos, &self.fit.clustering.assignments)?;
        write_labels(&dir.join("labels.csv"), &self.labels)?;
        write_json(&dir.join("diagnostics.json"), &RunDiagnostics::of(&self.fit))?;
        if let Some(sel) = &self.fit.selection {
            write_json(&dir.join("selection.json"), sel)?;
        }
        write_json(&dir.join("score.json"), &self.fit.score)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
    pub backbone_edges: usize,
    pub egos: usize,
    pub subsets: Vec<SubsetSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub subset: SubsetId,
    pub k: usize,
    pub silhouette: Option<f64>,
    pub labels: Vec<String>,
    pub score: SubsetScore,
    pub dir: PathBuf,
}

pub struct RunOutput {
    pub prepared: Prepared,
    pub subsets: Vec<SubsetRun>,
    pub summary: RunSummary,
}

/// Full run: build, prune, features, then for every configured subset
/// normalise, reduce, select k, cluster and label. Artifacts go to
/// `cfg.out`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    let p = Pipeline::new(cfg)?;
    let prepared = p.prepare()?;
    let out = &cfg.out;
    fs::create_dir_all(out)?;
    prepared.graph.write_csv(out.join("graph.csv"))?;
    if cfg.backbone.is_some() {
        prepared.backbone.write_csv(out.join("backbone.csv"))?;
    }
    full_matrix(&prepared.records).write_csv(out.join("features.csv"))?;

    let mut subsets = Vec::new();
    let mut summaries = Vec::new();
    for id in cfg.subsets.ids() {
        let run = p.fit(&prepared, id)?;
        let dir = out.join(id.as_str());
        run.write(&dir)?;
        info!("subset {id}: k = {}", run.fit.clustering.k);
        summaries.push(SubsetSummary {
            subset: id,
            k: run.fit.clustering.k,
            silhouette: run.fit.silhouette,
            labels: run.labels.iter().map(|l| l.label.label.to_string()).collect(),
            score: run.fit.score.clone(),
            dir: PathBuf::from(id.as_str()),
        });
        subsets.push(run);
    }
    let summary = RunSummary {
        seed: cfg.seed,
        nodes: prepared.graph.node_count(),
        edges: prepared.graph.edge_count(),
        backbone_edges: prepared.backbone.edge_count(),
        egos: prepared.records.len(),
        subsets: summaries,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(RunOutput {
        prepared,
        subsets,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{InputFormat, SubsetSelection};
    use crate::prototypes::{generate_corpus, CorpusSpec};

    fn corpus_config(dir: &Path, seed: u64) -> RunConfig {
        let c = generate_corpus(&CorpusSpec::new(10, 0.05, seed)).unwrap();
        c.graph.write_csv(dir.join("edges.csv")).unwrap();
        c.write_egos(dir.join("egos.csv")).unwrap();
        let mut cfg = RunConfig::new(seed);
        cfg.inputs = vec![InputSpec {
            path: dir.join("edges.csv"),
            format: InputFormat::EdgeList,
        }];
        cfg.egos = Some(dir.join("egos.csv"));
        cfg.backbone = None;
        cfg.out = dir.join("out");
        cfg
    }

    #[test]
    fn writes_artifacts_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = corpus_config(dir.path(), 4);
        let a = run_pipeline(&cfg).unwrap();
        assert_eq!(a.summary.egos, 80);
        for f in ["assignments.csv", "labels.csv", "diagnostics.json", "selection.json", "score.json"] {
            assert!(cfg.out.join("v").join(f).exists(), "{f}");
        }
        let first = fs::read(cfg.out.join("v/assignments.csv")).unwrap();
        // second run reads the cache
        run_pipeline(&cfg).unwrap();
        assert_eq!(fs::read(cfg.out.join("v/assignments.csv")).unwrap(), first);
        cfg.cache = false;
        cfg.out = dir.path().join("out2");
        run_pipeline(&cfg).unwrap();
        assert_eq!(fs::read(cfg.out.join("v/assignments.csv")).unwrap(), first);
        assert_eq!(
            fs::read(dir.path().join("out/v/labels.csv")).unwrap(),
            fs::read(cfg.out.join("v/labels.csv")).unwrap()
        );
    }

    #[test]
    fn errors_carry_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = corpus_config(dir.path(), 1);
        fs::write(dir.path().join("egos.csv"), "ego\nnobody\n").unwrap();
        let err = run_pipeline(&cfg).err().unwrap();
        assert!(matches!(err, Error::Stage { stage: "features", .. }), "{err}");
        assert!(err.is_validation());
        cfg.inputs.clear();
        assert!(run_pipeline(&cfg).is_err());
    }

    #[test]
    fn all_subsets_and_pruning() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = corpus_config(dir.path(), 2);
        cfg.subsets = SubsetSelection::All;
        cfg.backbone = Some(Default::default());
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(out.subsets.len(), 8);
        assert!(out.summary.backbone_edges <= out.summary.edges);
        assert!(cfg.out.join("backbone.csv").exists());
        assert!(out.subsets.iter().all(|s| s.fit.clustering.k <= cfg.selection.k_max));
    }
}
