use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{label_cluster, profile_egos, Label, Prototype, RuleTable};
use crate::error::{Error, Result};
use crate::graph::{build_graph_with_nodes, extract_ego, EdgeRecord, EgoGraph, EgoOrder, WeightedGraph};
use crate::rng::stream;

const MAX_ATTEMPTS: usize = 100;
const TEMPLATE_SEED: u64 = 0x5eed;

/// Allowed ego-graph sizes (nodes, ego included) per prototype.
pub fn size_range(p: Prototype) -> RangeInclusive<usize> {
    match p {
        Prototype::C8 => 4..=6,
        Prototype::C2 => 6..=10,
        Prototype::C6 => 7..=9,
        Prototype::C5 => 8..=13,
        Prototype::C7 => 11..=14,
        Prototype::C4 | Prototype::C1 | Prototype::C3 => 10..=13,
    }
}

/// Size used when none is requested. One size per prototype keeps the
/// structural counts (pendants, triads, outer nodes) fixed, so generated
/// egos of a prototype vary only through weights and noise.
pub fn default_size(p: Prototype) -> usize {
    match p {
        Prototype::C8 => 5,
        Prototype::C2 => 8,
        Prototype::C6 => 9,
        Prototype::C5 => 10,
        Prototype::C7 | Prototype::C4 | Prototype::C1 | Prototype::C3 => 12,
    }
}

type Edges = BTreeSet<(usize, usize)>;

fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Ego 0 adjacent to nodes `1..=n-1-outer`; each outer node hangs off a
/// random alter; random non-ego pairs are added until the density reaches
/// `density`.
fn dense(n: usize, outer: usize, density: f64, rng: &mut ChaCha8Rng) -> Edges {
    let alters = n - 1 - outer;
    let mut edges: Edges = (1..=alters).map(|a| (0, a)).collect();
    for o in alters + 1..n {
        edges.insert(pair(o, rng.random_range(1..=alters)));
    }
    let target = (density * (n * (n - 1)) as f64 / 2.0).round() as usize;
    let mut free: Vec<(usize, usize)> = (1..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|e| !edges.contains(e))
        .collect();
    free.shuffle(rng);
    let missing = target.saturating_sub(edges.len());
    edges.extend(free.into_iter().take(missing));
    edges
}

/// Number of nodes kept out of the ego's direct neighbourhood.
fn outer(n: usize, fraction: f64) -> usize {
    ((fraction * (n - 1) as f64).round() as usize).max(1)
}

fn structure(p: Prototype, n: usize, rng: &mut ChaCha8Rng) -> Edges {
    match p {
        Prototype::C8 => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Prototype::C2 => (1..n).map(|a| (0, a)).collect(),
        Prototype::C6 => {
            // two pendants, each hanging off one of the first two linked pairs
            let alters = n - 3;
            let triads = (alters / 2).min(2);
            let mut e: Edges = (1..=alters).map(|a| (0, a)).collect();
            for t in 0..triads {
                e.insert((2 * t + 1, 2 * t + 2));
            }
            for (i, q) in (alters + 1..n).enumerate() {
                e.insert((2 * (i % triads) + 1, q));
            }
            e
        }
        Prototype::C5 => {
            // linked pairs of alters plus one pendant
            let alters = n - 2;
            let mut e: Edges = (1..=alters).map(|a| (0, a)).collect();
            for a in (1..alters).step_by(2) {
                e.insert((a, a + 1));
            }
            e.insert((1, n - 1));
            e
        }
        Prototype::C7 => dense(n, outer(n, 0.08), 0.85, rng),
        Prototype::C4 => dense(n, outer(n, 0.25), 0.75, rng),
        Prototype::C1 => dense(n, outer(n, 0.45), 0.65, rng),
        Prototype::C3 => dense(n, outer(n, 0.2), 0.53, rng),
    }
}

fn weight(p: Prototype, e: (usize, usize), rng: &mut ChaCha8Rng) -> f64 {
    match p {
        Prototype::C5 if e.0 == 0 => rng.random_range(9.0..11.0),
        Prototype::C6 => rng.random_range(0.5..1.0),
        _ => rng.random_range(1.0..2.0),
    }
}

fn node_id(i: usize) -> String {
    format!("{i:02}")
}

/// Base edge set shared by every generated ego of one prototype and size.
fn template(p: Prototype, n: usize) -> Edges {
    structure(p, n, &mut stream(TEMPLATE_SEED, ((p.index() as u64) << 32) | n as u64))
}

fn attempt(p: Prototype, n: usize, noise: f64, rng: &mut ChaCha8Rng) -> Result<EgoGraph> {
    let mut edges = template(p, n);
    if noise > 0.0 {
        for i in 1..n {
            for j in i + 1..n {
                if rng.random_bool(noise) && !edges.remove(&(i, j)) {
                    edges.insert((i, j));
                }
            }
        }
    }
    let records: Vec<EdgeRecord> = edges
        .iter()
        .map(|&e| EdgeRecord::new(node_id(e.0), node_id(e.1), weight(p, e, rng)))
        .collect();
    let g = build_graph_with_nodes(&records, (0..n).map(node_id).collect())?;
    extract_ego(&g, &node_id(0), EgoOrder::Second)
}

fn generate_with(p: Prototype, size: Option<usize>, noise: f64, rng: &mut ChaCha8Rng) -> Result<EgoGraph> {
    let range = size_range(p);
    let n = size.unwrap_or_else(|| default_size(p));
    if !range.contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "{p} size must lie in {}..={}, got {n}",
            range.start(),
            range.end()
        )));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidParameter(format!("noise must lie in [0, 1], got {noise}")));
    }
    let rules = RuleTable::default();
    for _ in 0..MAX_ATTEMPTS {
        let e = attempt(p, n, noise, rng)?;
        let profile = profile_egos(std::slice::from_ref(&e))?;
        if label_cluster(&profile, &rules).label == Label::Prototype(p) {
            return Ok(e);
        }
    }
    Err(Error::GenerationFailed {
        label: p.to_string(),
        attempts: MAX_ATTEMPTS,
    })
}

/// Random ego graph (ego `"00"`) whose single-member profile carries label
/// `p` under the default rule table. Attempts failing the rule are redrawn.
///
/// `size` (within [`size_range`]) fixes the node count, defaulting to
/// [`default_size`]. The edge structure starts from a template shared by
/// all seeds of the same prototype and size; the seed drives edge weights
/// and the noise, which toggles every pair of non-ego nodes independently
/// with probability `noise`.
pub fn generate_prototype(p: Prototype, size: Option<usize>, noise: f64, seed: u64) -> Result<EgoGraph> {
    generate_with(p, size, noise, &mut stream(seed, p.index() as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub per_label: usize,
    pub noise: f64,
    pub seed: u64,
    pub prototypes: Vec<Prototype>,
}

impl CorpusSpec {
    pub fn new(per_label: usize, noise: f64, seed: u64) -> CorpusSpec {
        CorpusSpec {
            per_label,
            noise,
            seed,
            prototypes: Prototype::ALL.to_vec(),
        }
    }
}

/// Disjoint union of generated ego graphs with the generating label of
/// every ego.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub graph: WeightedGraph,
    /// `(ego id, generating prototype)`, sorted by id.
    pub egos: Vec<(String, Prototype)>,
}

impl Corpus {
    pub fn ego_ids(&self) -> Vec<String> {
        self.egos.iter().map(|e| e.0.clone()).collect()
    }

    pub fn truth(&self) -> Vec<Prototype> {
        self.egos.iter().map(|e| e.1).collect()
    }

    /// Writes `egos.csv` with header `ego,label`.
    pub fn write_egos(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["ego", "label"])?;
        for (ego, p) in &self.egos {
            w.write_record([ego.as_str(), p.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates `per_label` egos of each prototype. Node ids are prefixed
/// `{label}-{index:03}-` so the ego of each piece is `{label}-{index:03}-00`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    if spec.per_label == 0 || spec.prototypes.is_empty() {
        return Err(Error::InvalidParameter("corpus must contain at least one ego".into()));
    }
    let jobs: Vec<(Prototype, usize)> = spec
        .prototypes
        .iter()
        .flat_map(|&p| (0..spec.per_label).map(move |i| (p, i)))
        .collect();
    let pieces: Vec<(String, Prototype, EgoGraph)> = jobs
        .par_iter()
        .map(|&(p, i)| {
            let mut rng = stream(spec.seed, ((p.index() as u64) << 32) | i as u64);
            let e = generate_with(p, None, spec.noise, &mut rng)?;
            Ok((format!("{p}-{i:03}-"), p, e))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut nodes = Vec::new();
    let mut egos = Vec::new();
    for (prefix, p, e) in &pieces {
        let g = e.graph();
        nodes.extend(g.ids().iter().map(|id| format!("{prefix}{id}")));
        records.extend(
            g.edges()
                .map(|(a, b, w)| EdgeRecord::new(format!("{prefix}{}", g.id(a)), format!("{prefix}{}", g.id(b)), w)),
        );
        egos.push((format!("{prefix}{}", e.ego_id()), *p));
    }
    egos.sort();
    Ok(Corpus {
        graph: build_graph_with_nodes(&records, nodes)?,
        egos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_and_star_shapes() {
        let k5 = generate_prototype(Prototype::C8, Some(5), 0.0, 3).unwrap();
        assert_eq!(k5.graph().edge_count(), 10);
        assert!(k5.graph().edges().all(|(_, _, w)| w > 0.0));
        let s = generate_prototype(Prototype::C2, Some(8), 0.0, 3).unwrap();
        assert_eq!(s.graph().node_count(), 8);
        assert_eq!(s.graph().edge_count(), 7);
        assert_eq!(s.ego_degree(), 7);
    }

    #[test]
    fn dense_with_noise_stays_in_band() {
        for seed in 0..10 {
            let e = generate_prototype(Prototype::C4, Some(12), 0.05, seed).unwrap();
            let d = crate::features::EgoSummary::of(&e).density();
            assert!((0.7..0.8).contains(&d), "{d}");
        }
    }

    #[test]
    fn every_size_labels_cleanly_without_noise() {
        for p in Prototype::ALL {
            for n in size_range(p) {
                generate_prototype(p, Some(n), 0.0, 1).unwrap_or_else(|e| panic!("{p} n={n}: {e}"));
            }
        }
    }

    #[test]
    fn seeds_share_the_template() {
        let a = generate_prototype(Prototype::C1, None, 0.0, 1).unwrap();
        let b = generate_prototype(Prototype::C1, None, 0.0, 2).unwrap();
        let edges = |e: &EgoGraph| e.graph().edges().map(|(i, j, _)| (i, j)).collect::<Vec<_>>();
        assert_eq!(edges(&a), edges(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn size_out_of_range() {
        assert!(generate_prototype(Prototype::C8, Some(9), 0.0, 0).is_err());
        assert!(generate_prototype(Prototype::C8, None, 1.5, 0).is_err());
    }

    #[test]
    fn deterministic() {
        for p in Prototype::ALL {
            let a = generate_prototype(p, None, 0.05, 17).unwrap();
            let b = generate_prototype(p, None, 0.05, 17).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn corpus_layout() {
        let c = generate_corpus(&CorpusSpec::new(3, 0.0, 1)).unwrap();
        assert_eq!(c.egos.len(), 24);
        assert_eq!(c.egos[0].0, "C1-000-00");
        assert!(c.egos.iter().all(|(id, _)| c.graph.index_of(id).is_some()));
    }
}
