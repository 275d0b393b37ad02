use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use egonet_core::cluster::Algorithm;
use egonet_core::features::{compute_ego_records, CentralityScale, FeatureMatrix};
use egonet_core::graph::{disparity_filter, BackboneParams, EgoOrder, WeightedGraph};
use egonet_core::io::write_json;
use egonet_core::pipeline::{
    compare_report, default_rules, events_to_graph, fit_subset_k, full_matrix, label_clusters, load_events,
    read_assignments, read_ego_list, reduce_subset, run_pipeline, run_temporal, select_k, synthetic_graph,
    write_assignments, write_compare_csv, write_events, write_labels, AnalysisParams, Granularity, InputFormat,
    InputSpec, KSelection, RunConfig, RunDiagnostics, ScaleSpec, SubsetSelection, TemporalConfig, WindowSpec,
};
use egonet_core::prototypes::{generate_corpus, CorpusSpec};
use egonet_core::{ClusteringResult, Error, SubsetId};

#[derive(Parser)]
#[command(name = "egonet", version, about = "Ego-network features, clustering and prototype labels")]
struct Cli {
    /// Master seed; required by every randomised command unless the
    /// config file sets it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `out`, or the config's).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat malformed input rows as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// More logging (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Input file; repeatable.
    #[arg(long = "input", value_name = "PATH")]
    inputs: Vec<PathBuf>,
    /// Format of every `--input`: edge-list, call-log or proximity.
    #[arg(long, default_value = "edge-list")]
    format: InputFormat,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// CSV whose `ego` column lists the egos to cluster.
    #[arg(long)]
    egos: Option<PathBuf>,
    /// Ego-graph order: 1 or 2.
    #[arg(long)]
    order: Option<u8>,
    /// i..viii, fsfs or all.
    #[arg(long)]
    subset: Option<SubsetSelection>,
    /// kmeans, hierarchical or ap.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// gap or l-method.
    #[arg(long = "k-method")]
    k_method: Option<KSelection>,
    /// Largest number of clusters considered (default 8)
    #[arg(long = "k-max")]
    k_max: Option<usize>,
    /// Disparity-filter significance.
    #[arg(long)]
    significance: Option<f64>,
    /// Skip backbone pruning.
    #[arg(long = "no-prune")]
    no_prune: bool,
    /// Recompute every stage instead of reading `<out>/.cache`.
    #[arg(long = "no-cache")]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs into one sorted event file (`events.csv`).
    Ingest(InputArgs),
    /// Build the weighted interaction graph (`graph.csv`).
    Build(InputArgs),
    /// Disparity-filter backbone of an edge list (`backbone.csv`).
    Prune {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        significance: f64,
    },
    /// The 13 features of every ego (`features.csv`).
    Features {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        egos: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        order: u8,
        /// Unnormalised centralities.
        #[arg(long)]
        raw: bool,
    },
    /// Cluster a feature CSV (`assignments.csv`, `diagnostics.json`).
    Cluster {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "v")]
        subset: SubsetId,
        #[arg(long, default_value = "hierarchical")]
        algorithm: Algorithm,
        /// Fixed cluster count; selected with `--k-method` when absent.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "k-method")]
        k_method: Option<KSelection>,
        /// Largest number of clusters considered (default 8)
        #[arg(long = "k-max")]
        k_max: Option<usize>,
    },
    /// Choose the number of clusters (`selection.json`).
    SelectK {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "v")]
        subset: SubsetId,
        #[arg(long, default_value = "hierarchical")]
        algorithm: Algorithm,
        #[arg(long = "k-method")]
        k_method: Option<KSelection>,
        /// Largest number of clusters considered (default 8)
        #[arg(long = "k-max")]
        k_max: Option<usize>,
    },
    /// Label the clusters of an assignment CSV (`labels.csv`).
    Label {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        assignments: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: u8,
    },
    /// Pooled fit, then per-window labels and occupancy (`temporal/`).
    Temporal {
        #[command(flatten)]
        run: RunArgs,
        /// day, week or month.
        #[arg(long)]
        granularity: Option<Granularity>,
        /// Window range start (ISO 8601).
        #[arg(long)]
        start: Option<String>,
        /// Window range end, exclusive.
        #[arg(long)]
        end: Option<String>,
        /// Minutes east of UTC for calendar boundaries.
        #[arg(long = "tz-offset", default_value_t = 0, allow_hyphen_values = true)]
        tz_offset: i32,
    },
    /// Subset × algorithm comparison table (`compare.csv`, `compare.json`).
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',', default_value = "kmeans,hierarchical,ap")]
        algorithms: Vec<Algorithm>,
    },
    /// Synthetic prototype corpus (`edges.csv`, `egos.csv`) or a large
    /// community graph (`--scale`).
    Generate {
        #[arg(long = "per-label", default_value_t = 50)]
        per_label: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Generate an Orange-size community graph instead.
        #[arg(long)]
        scale: bool,
    },
    /// Whole pipeline from inputs to labels.
    Run(RunArgs),
}

struct Ctx {
    seed: Option<u64>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    strict: bool,
}

impl Ctx {
    fn seed(&self) -> Result<u64, Error> {
        self.seed
            .ok_or_else(|| Error::InvalidParameter("this command needs --seed (or a config with a seed)".into()))
    }

    fn out(&self) -> Result<PathBuf, Error> {
        let out = match (&self.out, &self.config) {
            (Some(o), _) => o.clone(),
            (None, Some(p)) => RunConfig::from_json_file(p)?.out,
            (None, None) => PathBuf::from("out"),
        };
        fs::create_dir_all(&out)?;
        Ok(out)
    }

    /// Config file (if any) overlaid with global flags.
    fn base_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::new(self.seed()?),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.strict |= self.strict;
        Ok(cfg)
    }

    fn run_config(&self, a: &RunArgs) -> Result<RunConfig, Error> {
        let mut cfg = self.base_config()?;
        if !a.input.inputs.is_empty() {
            cfg.inputs = input_specs(&a.input);
        }
        if a.egos.is_some() {
            cfg.egos = a.egos.clone();
        }
        if let Some(o) = a.order {
            cfg.ego_order = ego_order(o)?;
        }
        if let Some(s) = a.subset {
            cfg.subsets = s;
        }
        if let Some(al) = a.algorithm {
            cfg.algorithm = al;
        }
        if let Some(m) = a.k_method {
            cfg.selection.method = m;
        }
        if let Some(k) = a.k_max {
            cfg.selection.k_max = k;
        }
        if let Some(s) = a.significance {
            cfg.backbone = Some(BackboneParams {
                significance: s,
                ..Default::default()
            });
        }
        if a.no_prune {
            cfg.backbone = None;
        }
        if a.no_cache {
            cfg.cache = false;
        }
        Ok(cfg)
    }
}

fn input_specs(a: &InputArgs) -> Vec<InputSpec> {
    a.inputs
        .iter()
        .map(|p| InputSpec {
            path: p.clone(),
            format: a.format,
        })
        .collect()
}

fn ego_order(o: u8) -> Result<EgoOrder, Error> {
    match o {
        1 => Ok(EgoOrder::First),
        2 => Ok(EgoOrder::Second),
        _ => Err(Error::InvalidParameter(format!("ego order must be 1 or 2, got {o}"))),
    }
}

fn analysis_params(
    ctx: &Ctx,
    algorithm: Algorithm,
    k_method: Option<KSelection>,
    k_max: Option<usize>,
) -> Result<AnalysisParams, Error> {
    let mut cfg = ctx.base_config()?;
    cfg.algorithm = algorithm;
    if let Some(m) = k_method {
        cfg.selection.method = m;
    }
    if let Some(k) = k_max {
        cfg.selection.k_max = k;
    }
    cfg.validate()?;
    Ok(AnalysisParams::from_config(&cfg))
}

fn read_graph(path: &Path) -> Result<WeightedGraph, Error> {
    WeightedGraph::read_csv(path)
}

fn write_clustering(out: &Path, egos: &[String], c: &ClusteringResult) -> Result<(), Error> {
    write_assignments(&out.join("assignments.csv"), egos, &c.assignments)
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<(), Error> {
    match command {
        Command::Ingest(a) => {
            let events = load_events(&input_specs(&a), ctx.strict)?;
            let out = ctx.out()?;
            write_events(&out.join("events.csv"), &events)?;
            info!("{} events", events.len());
        }
        Command::Build(a) => {
            let events = load_events(&input_specs(&a), ctx.strict)?;
            let g = events_to_graph(&events)?;
            g.write_csv(ctx.out()?.join("graph.csv"))?;
            info!("{} nodes, {} edges", g.node_count(), g.edge_count());
        }
        Command::Prune { graph, significance } => {
            let g = read_graph(&graph)?;
            let b = disparity_filter(
                &g,
                &BackboneParams {
                    significance,
                    ..Default::default()
                },
            )?;
            b.write_csv(ctx.out()?.join("backbone.csv"))?;
            info!("kept {} of {} edges", b.edge_count(), g.edge_count());
        }
        Command::Features {
            graph,
            egos,
            order,
            raw,
        } => {
            let g = read_graph(&graph)?;
            let egos = egos.as_deref().map(read_ego_list).transpose()?;
            let scale = if raw {
                CentralityScale::Raw
            } else {
                CentralityScale::Normalized
            };
            let records = compute_ego_records(&g, egos.as_deref(), ego_order(order)?, scale)?;
            full_matrix(&records).write_csv(ctx.out()?.join("features.csv"))?;
        }
        Command::Cluster {
            features,
            subset,
            algorithm,
            k,
            k_method,
            k_max,
        } => {
            let p = analysis_params(ctx, algorithm, k_method, k_max)?;
            let full = FeatureMatrix::read_csv(&features)?;
            let fit = fit_subset_k(&full, subset, &p, k)?;
            let out = ctx.out()?;
            write_clustering(&out, &fit.egos, &fit.clustering)?;
            write_json(&out.join("diagnostics.json"), &RunDiagnostics::of(&fit))?;
            write_json(&out.join("score.json"), &fit.score)?;
            if let Some(sel) = &fit.selection {
                write_json(&out.join("selection.json"), sel)?;
            }
            info!("k = {}", fit.clustering.k);
        }
        Command::SelectK {
            features,
            subset,
            algorithm,
            k_method,
            k_max,
        } => {
            let p = analysis_params(ctx, algorithm, k_method, k_max)?;
            let full = FeatureMatrix::read_csv(&features)?;
            let (_, _, pca) = reduce_subset(&full, subset, &p)?;
            let choice = select_k(&pca.rows, &p)?;
            write_json(&ctx.out()?.join("selection.json"), &choice)?;
            println!("{}", choice.chosen_k());
        }
        Command::Label {
            graph,
            assignments,
            order,
        } => {
            let g = read_graph(&graph)?;
            let (egos, clusters) = read_assignments(&assignments)?;
            let records = compute_ego_records(&g, Some(&egos), ego_order(order)?, CentralityScale::Normalized)?;
            let k = clusters.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            clusters.iter().for_each(|&c| seen[c] = true);
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidParameter("cluster indices must be dense 0..k".into()));
            }
            let c = ClusteringResult {
                algorithm: Algorithm::Hierarchical,
                assignments: clusters,
                k,
                centers: Vec::new(),
                exemplars: None,
                diagnostics: egonet_core::cluster::Diagnostics::Hierarchical {
                    cut_height: 0.0,
                    merge_heights: Vec::new(),
                },
                seed: 0,
                converged: true,
            };
            let labels = label_clusters(&egos, &c, &records, &default_rules(&records)?)?;
            write_labels(&ctx.out()?.join("labels.csv"), &labels)?;
        }
        Command::Temporal {
            run,
            granularity,
            start,
            end,
            tz_offset,
        } => {
            let mut cfg = ctx.run_config(&run)?;
            if let (Some(granularity), Some(s), Some(e)) = (granularity, &start, &end) {
                let ts = |t: &str| {
                    egonet_core::pipeline::parse_timestamp(t).map_err(Error::InvalidParameter)
                };
                cfg.temporal = Some(TemporalConfig {
                    window: WindowSpec {
                        granularity,
                        start: ts(s)?,
                        end: ts(e)?,
                        tz_offset_minutes: tz_offset,
                    },
                    subset: cfg.temporal.as_ref().and_then(|t| t.subset),
                });
            } else if granularity.is_some() || start.is_some() || end.is_some() {
                return Err(Error::InvalidParameter(
                    "--granularity, --start and --end must be given together".into(),
                ));
            }
            let t = run_temporal(&cfg)?;
            info!("{} windows, {} assignments", t.windows.len(), t.assignments.len());
        }
        Command::Compare { run, algorithms } => {
            let mut cfg = ctx.run_config(&run)?;
            if run.subset.is_none() && ctx.config.is_none() {
                cfg.subsets = SubsetSelection::All;
            }
            let p = egonet_core::pipeline::Pipeline::new(&cfg)?;
            let prepared = p.prepare()?;
            let full = full_matrix(&prepared.records);
            let rows = compare_report(
                &full,
                &prepared.records,
                &cfg.subsets.ids(),
                &algorithms,
                &AnalysisParams::from_config(&cfg),
                &prepared.rules,
            )?;
            fs::create_dir_all(&cfg.out)?;
            write_compare_csv(&cfg.out.join("compare.csv"), &rows)?;
            write_json(&cfg.out.join("compare.json"), &rows)?;
        }
        Command::Generate {
            per_label,
            noise,
            scale,
        } => {
            let seed = ctx.seed()?;
            let out = ctx.out()?;
            if scale {
                let g = synthetic_graph(&ScaleSpec::orange(seed))?;
                g.write_csv(out.join("edges.csv"))?;
            } else {
                let c = generate_corpus(&CorpusSpec::new(per_label, noise, seed))?;
                c.graph.write_csv(out.join("edges.csv"))?;
                c.write_egos(out.join("egos.csv"))?;
            }
        }
        Command::Run(a) => {
            let cfg = ctx.run_config(&a)?;
            let r = run_pipeline(&cfg)?;
            for s in &r.summary.subsets {
                println!("{}\tk={}\t{}", s.subset, s.k, s.labels.join(","));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let ctx = Ctx {
        seed: cli.seed,
        config: cli.config,
        out: cli.out,
        strict: cli.strict,
    };
    match dispatch(&ctx, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
