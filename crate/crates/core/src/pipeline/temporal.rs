use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{ClusterLabel, SubsetFit};
use super::config::RunConfig;
use super::run::{load_events, Pipeline, SubsetRun};
use super::window::{window_graphs, Window};
use crate::error::{Error, Result};
use crate::features::{compute_ego_records, CentralityScale};
use crate::graph::{EgoOrder, WeightedGraph};
use crate::io::{format_sig, write_json};
use crate::prototypes::Label;

/// Label of one ego in one window; `None` means the ego had no edges there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalAssignment {
    pub ego: String,
    pub window: usize,
    pub label: Option<Label>,
}

impl TemporalAssignment {
    pub fn label_str(&self) -> String {
        self.label.map_or_else(|| "no-data".to_string(), |l| l.to_string())
    }
}

/// Assigns every ego in every window to the nearest pooled cluster.
/// Windows are processed in parallel; output is sorted by (ego, window).
pub fn assign_windows(
    fit: &SubsetFit,
    labels: &[ClusterLabel],
    egos: &[String],
    graphs: &[WeightedGraph],
    order: EgoOrder,
    scale: CentralityScale,
) -> Result<Vec<TemporalAssignment>> {
    let per_window: Vec<Vec<TemporalAssignment>> = graphs
        .par_iter()
        .enumerate()
        .map(|(w, g)| {
            let active: Vec<String> = egos
                .iter()
                .filter(|e| g.index_of(e).is_some_and(|i| g.degree(i) > 0))
                .cloned()
                .collect();
            let records = if active.is_empty() {
                Vec::new()
            } else {
                compute_ego_records(g, Some(&active), order, scale)?
            };
            let mut by_ego: BTreeMap<&str, Label> = BTreeMap::new();
            for r in &records {
                by_ego.insert(&r.features.ego, labels[fit.assign(&r.features)].label.label);
            }
            Ok(egos
                .iter()
                .map(|e| TemporalAssignment {
                    ego: e.clone(),
                    window: w,
                    label: by_ego.get(e.as_str()).copied(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<TemporalAssignment> = per_window.into_iter().flatten().collect();
    out.sort_by(|a, b| a.ego.cmp(&b.ego).then(a.window.cmp(&b.window)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoOccupancy {
    pub ego: String,
    pub windows: usize,
    pub windows_with_data: usize,
    /// Share of data-bearing windows per label; sums to 1 unless empty.
    pub fractions: BTreeMap<Label, f64>,
    /// Set when the ego has no data in any window.
    pub no_data: bool,
}

/// Per-ego label shares over the windows where the ego had data.
pub fn occupancy_report(assignments: &[TemporalAssignment]) -> Vec<EgoOccupancy> {
    let mut per_ego: BTreeMap<&str, (usize, BTreeMap<Label, usize>)> = BTreeMap::new();
    for a in assignments {
        let entry = per_ego.entry(&a.ego).or_default();
        entry.0 += 1;
        if let Some(l) = a.label {
            *entry.1.entry(l).or_default() += 1;
        }
    }
    per_ego
        .into_iter()
        .map(|(ego, (windows, counts))| {
            let with_data: usize = counts.values().sum();
            EgoOccupancy {
                ego: ego.to_string(),
                windows,
                windows_with_data: with_data,
                fractions: counts
                    .into_iter()
                    .map(|(l, c)| (l, c as f64 / with_data as f64))
                    .collect(),
                no_data: with_data == 0,
            }
        })
        .collect()
}

/// `ego,window,start,end,weekend,label`, one row per assignment.
pub fn write_sequence_csv(path: &Path, windows: &[Window], assignments: &[TemporalAssignment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ego", "window", "start", "end", "weekend", "label"])?;
    let ts = |t: &chrono::DateTime<chrono::Utc>| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    for a in assignments {
        let win = &windows[a.window];
        w.write_record([
            a.ego.clone(),
            a.window.to_string(),
            ts(&win.start),
            ts(&win.end),
            win.weekend.to_string(),
            a.label_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `ego,label,fraction` for egos with data; egos without any are listed
/// with label `no-data` and an empty fraction.
pub fn write_occupancy_csv(path: &Path, report: &[EgoOccupancy]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ego", "label", "fraction"])?;
    for o in report {
        if o.no_data {
            w.write_record([o.ego.as_str(), "no-data", ""])?;
        }
        for (l, f) in &o.fractions {
            w.write_record([o.ego.clone(), l.to_string(), format_sig(*f, 12)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub struct TemporalRun {
    pub pooled: SubsetRun,
    pub windows: Vec<Window>,
    pub assignments: Vec<TemporalAssignment>,
    pub occupancy: Vec<EgoOccupancy>,
}

/// Pooled fit over the whole period, then nearest-centre assignment per
/// (ego, window). Window graphs are not pruned. Writes `temporal/` under
/// `cfg.out`.
pub fn run_temporal(cfg: &RunConfig) -> Result<TemporalRun> {
    let t = cfg
        .temporal
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("temporal run needs a `temporal` section".into()))?;
    let p = Pipeline::new(cfg)?;
    let prepared = p.prepare()?;
    let subset = t.subset.unwrap_or(cfg.subsets.ids()[0]);
    let pooled = p.fit(&prepared, subset)?;
    let assign = || -> Result<_> {
        let events = load_events(&cfg.inputs, cfg.strict)?;
        let (windows, graphs) = window_graphs(&events, &t.window)?;
        let assignments = assign_windows(
            &pooled.fit,
            &pooled.labels,
            &pooled.fit.egos,
            &graphs,
            cfg.ego_order,
            cfg.centrality_scale,
        )?;
        Ok((windows, assignments))
    };
    let (windows, assignments) = assign().map_err(|e| e.in_stage("temporal"))?;
    let occupancy = occupancy_report(&assignments);

    let dir = cfg.out.join("temporal");
    pooled.write(&dir.join(subset.as_str()))?;
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("windows.json"), &windows)?;
    write_sequence_csv(&dir.join("sequence.csv"), &windows, &assignments)?;
    write_occupancy_csv(&dir.join("occupancy.csv"), &occupancy)?;
    write_json(&dir.join("occupancy.json"), &occupancy)?;
    Ok(TemporalRun {
        pooled,
        windows,
        assignments,
        occupancy,
    })
}
