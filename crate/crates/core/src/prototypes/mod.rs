//! Cluster profiles, the C1–C8 rule table and synthetic prototype
//! generators.

mod generate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use generate::{default_size, generate_corpus, generate_prototype, size_range, Corpus, CorpusSpec};

use crate::error::{Error, Result};
use crate::features::{ego_features, CentralityScale, EgoRecord, EgoSummary, Feature};
use crate::graph::EgoGraph;

/// The eight neighbourhood patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prototype {
    /// Linked neighbours.
    C1,
    /// Star.
    C2,
    /// Strong ego neighbour.
    C3,
    /// Dense.
    C4,
    /// Powerful ego node.
    C5,
    /// Less cohesive star.
    C6,
    /// Strongly linked.
    C7,
    /// Complete.
    C8,
}

impl Prototype {
    pub const ALL: [Prototype; 8] = [
        Prototype::C1,
        Prototype::C2,
        Prototype::C3,
        Prototype::C4,
        Prototype::C5,
        Prototype::C6,
        Prototype::C7,
        Prototype::C8,
    ];

    /// Order in which rules are tried.
    pub const PRIORITY: [Prototype; 8] = [
        Prototype::C8,
        Prototype::C2,
        Prototype::C7,
        Prototype::C4,
        Prototype::C1,
        Prototype::C3,
        Prototype::C5,
        Prototype::C6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"][self.index()]
    }

    pub fn description(self) -> &'static str {
        match self {
            Prototype::C1 => "linked neighbors",
            Prototype::C2 => "star",
            Prototype::C3 => "strong ego neighbor",
            Prototype::C4 => "dense",
            Prototype::C5 => "powerful ego node",
            Prototype::C6 => "less cohesive star",
            Prototype::C7 => "strongly linked",
            Prototype::C8 => "complete",
        }
    }
}

impl fmt::Display for Prototype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Prototype {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Prototype::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown prototype `{s}`")))
    }
}

/// Outcome of labelling: a prototype or an explicit miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Label {
    Prototype(Prototype),
    Unmatched,
}

impl Label {
    pub fn prototype(self) -> Option<Prototype> {
        match self {
            Label::Prototype(p) => Some(p),
            Label::Unmatched => None,
        }
    }
}

impl From<Prototype> for Label {
    fn from(p: Prototype) -> Self {
        Label::Prototype(p)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Prototype(p) => p.fmt(f),
            Label::Unmatched => f.write_str("unmatched"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("unmatched") {
            Ok(Label::Unmatched)
        } else {
            s.parse().map(Label::Prototype)
        }
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for Label {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

/// Aggregate description of the egos in one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub members: usize,
    /// Mean of every feature over the members, in canonical order.
    pub mean_features: [f64; Feature::COUNT],
    /// Smallest and largest member ego-graph density.
    pub density_band: (f64, f64),
    pub mean_density: f64,
    /// Fraction of members whose direct neighbours share no edge.
    pub star_score: f64,
    /// Fraction of members whose ego graph is complete.
    pub completeness: f64,
    pub mean_triangles: f64,
    /// Ego-graph node counts.
    pub size_stats: SizeStats,
}

impl ClusterProfile {
    pub fn feature(&self, f: Feature) -> f64 {
        self.mean_features[f.index()]
    }
}

const COMPLETE_TOLERANCE: f64 = 1e-12;

fn is_star(s: &EgoSummary) -> bool {
    s.nodes >= 3 && s.neighbor_links == 0
}

/// Profiles a cluster from its members' feature vectors and summaries.
pub fn profile_cluster(members: &[&EgoRecord]) -> Result<ClusterProfile> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let n = members.len() as f64;
    let mut mean_features = [0.0; Feature::COUNT];
    for m in members {
        for (acc, v) in mean_features.iter_mut().zip(&m.features.values) {
            *acc += v;
        }
    }
    mean_features.iter_mut().for_each(|v| *v /= n);
    let densities: Vec<f64> = members.iter().map(|m| m.summary.density()).collect();
    let frac = |pred: &dyn Fn(&EgoRecord) -> bool| members.iter().filter(|m| pred(m)).count() as f64 / n;
    let sizes: Vec<usize> = members.iter().map(|m| m.summary.nodes).collect();
    Ok(ClusterProfile {
        members: members.len(),
        mean_features,
        density_band: (
            densities.iter().copied().fold(f64::INFINITY, f64::min),
            densities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        mean_density: densities.iter().sum::<f64>() / n,
        star_score: frac(&|m| is_star(&m.summary)),
        completeness: frac(&|m| m.summary.nodes >= 2 && m.summary.density() >= 1.0 - COMPLETE_TOLERANCE),
        mean_triangles: members.iter().map(|m| m.summary.triangles as f64).sum::<f64>() / n,
        size_stats: SizeStats {
            min: *sizes.iter().min().unwrap(),
            max: *sizes.iter().max().unwrap(),
            mean: sizes.iter().sum::<usize>() as f64 / n,
        },
    })
}

/// Profiles ego graphs directly, computing their features first.
pub fn profile_egos(egos: &[EgoGraph]) -> Result<ClusterProfile> {
    let records: Vec<EgoRecord> = egos
        .iter()
        .map(|e| EgoRecord {
            features: ego_features(e, CentralityScale::Normalized),
            summary: EgoSummary::of(e),
        })
        .collect();
    profile_cluster(&records.iter().collect::<Vec<_>>())
}

/// Corpus-wide medians that the relative rules compare against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusReference {
    pub closeness: f64,
    pub eigenvector: f64,
    pub nodes: f64,
}

impl Default for CorpusReference {
    fn default() -> Self {
        CorpusReference {
            closeness: 1.2,
            eigenvector: 1.0,
            nodes: 10.0,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

impl CorpusReference {
    pub fn from_records(records: &[EgoRecord]) -> Result<CorpusReference> {
        if records.is_empty() {
            return Err(Error::EmptyInput("ego records".into()));
        }
        let col = |f: Feature| median(records.iter().map(|r| r.features.get(f)).collect());
        Ok(CorpusReference {
            closeness: col(Feature::ClosenessCentrality),
            eigenvector: col(Feature::EigenvectorCentrality),
            nodes: median(records.iter().map(|r| r.summary.nodes as f64).collect()),
        })
    }
}

/// Half-open density interval `[low, high)`; `high` is inclusive when
/// `closed` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
    pub closed: bool,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && (x < self.high || (self.closed && x == self.high))
    }
}

/// Thresholds of the labelling rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleTable {
    pub completeness_min: f64,
    pub star_min: f64,
    pub c7_band: Band,
    pub c4_band: Band,
    pub c1_band: Band,
    pub c3_band: Band,
    pub c5_density_max: f64,
    pub c6_density_max: f64,
    pub c6_triangles_min: f64,
    pub c6_triangles_max: f64,
    pub reference: CorpusReference,
}

impl Default for RuleTable {
    fn default() -> Self {
        let band = |low, high, closed| Band { low, high, closed };
        RuleTable {
            completeness_min: 0.9,
            star_min: 0.8,
            c7_band: band(0.8, 0.9, true),
            c4_band: band(0.7, 0.8, false),
            c1_band: band(0.6, 0.7, false),
            c3_band: band(0.5, 0.6, false),
            c5_density_max: 0.5,
            c6_density_max: 0.4,
            c6_triangles_min: 1.0,
            c6_triangles_max: 3.0,
            reference: CorpusReference::default(),
        }
    }
}

impl RuleTable {
    pub fn with_reference(reference: CorpusReference) -> RuleTable {
        RuleTable {
            reference,
            ..RuleTable::default()
        }
    }

    /// Evidence for `p` if its rule holds for `profile`.
    fn evaluate(&self, p: Prototype, profile: &ClusterProfile) -> Option<Vec<Evidence>> {
        let ev = |rule: String, value: f64| Evidence { rule, value };
        let d = profile.mean_density;
        let band = |b: &Band| {
            b.contains(d).then(|| {
                let close = if b.closed { "]" } else { ")" };
                vec![ev(format!("density in [{}, {}{close}", b.low, b.high), d)]
            })
        };
        match p {
            Prototype::C8 => (profile.completeness >= self.completeness_min)
                .then(|| vec![ev(format!("completeness >= {}", self.completeness_min), profile.completeness)]),
            Prototype::C2 => (profile.star_score >= self.star_min)
                .then(|| vec![ev(format!("star_score >= {}", self.star_min), profile.star_score)]),
            Prototype::C7 => band(&self.c7_band),
            Prototype::C4 => band(&self.c4_band),
            Prototype::C1 => band(&self.c1_band),
            Prototype::C3 => band(&self.c3_band),
            Prototype::C5 => {
                let c = profile.feature(Feature::ClosenessCentrality);
                let e = profile.feature(Feature::EigenvectorCentrality);
                let r = &self.reference;
                (c >= r.closeness && e >= r.eigenvector - 1e-9 && d < self.c5_density_max).then(|| {
                    vec![
                        ev(format!("closeness >= {}", r.closeness), c),
                        ev(format!("eigenvector >= {}", r.eigenvector), e),
                        ev(format!("density < {}", self.c5_density_max), d),
                    ]
                })
            }
            Prototype::C6 => {
                let size = profile.size_stats.mean;
                let t = profile.mean_triangles;
                (size < self.reference.nodes
                    && d < self.c6_density_max
                    && (self.c6_triangles_min..=self.c6_triangles_max).contains(&t))
                .then(|| {
                    vec![
                        ev(format!("nodes < {}", self.reference.nodes), size),
                        ev(format!("density < {}", self.c6_density_max), d),
                        ev(
                            format!("triangles in [{}, {}]", self.c6_triangles_min, self.c6_triangles_max),
                            t,
                        ),
                    ]
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeLabel {
    pub label: Label,
    /// Every satisfied rule, the chosen label's first.
    pub evidence: Vec<Evidence>,
    /// One over the number of prototypes whose rule matched; 0 when none did.
    pub confidence: f64,
    /// Other prototypes whose rule also matched, in priority order.
    pub also_matched: Vec<Prototype>,
}

impl PrototypeLabel {
    /// Evidence rendered as `rule=value` pairs joined by `;`.
    pub fn evidence_string(&self) -> String {
        self.evidence
            .iter()
            .map(|e| format!("{}={}", e.rule, crate::io::format_sig(e.value, 6)))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Labels a profile with the first prototype, in [`Prototype::PRIORITY`]
/// order, whose rule it satisfies.
pub fn label_cluster(profile: &ClusterProfile, rules: &RuleTable) -> PrototypeLabel {
    let matched: Vec<(Prototype, Vec<Evidence>)> = Prototype::PRIORITY
        .into_iter()
        .filter_map(|p| rules.evaluate(p, profile).map(|e| (p, e)))
        .collect();
    if matched.is_empty() {
        let ev = |rule: &str, value| Evidence {
            rule: rule.to_string(),
            value,
        };
        return PrototypeLabel {
            label: Label::Unmatched,
            evidence: vec![
                ev("mean_density", profile.mean_density),
                ev("star_score", profile.star_score),
                ev("completeness", profile.completeness),
                ev("mean_triangles", profile.mean_triangles),
            ],
            confidence: 0.0,
            also_matched: Vec::new(),
        };
    }
    let confidence = 1.0 / matched.len() as f64;
    let label = Label::Prototype(matched[0].0);
    let also_matched = matched[1..].iter().map(|m| m.0).collect();
    let evidence = matched
        .into_iter()
        .flat_map(|(p, ev)| {
            ev.into_iter().map(move |e| Evidence {
                rule: format!("{p}: {}", e.rule),
                value: e.value,
            })
        })
        .collect();
    PrototypeLabel {
        label,
        evidence,
        confidence,
        also_matched,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, EdgeRecord, EgoOrder};

    fn ego(edges: &[(usize, usize)], n: usize) -> EgoGraph {
        let recs: Vec<_> = edges
            .iter()
            .map(|&(a, b)| EdgeRecord::new(format!("{a:02}"), format!("{b:02}"), 1.0))
            .collect();
        let g = crate::graph::build_graph_with_nodes(&recs, (0..n).map(|i| format!("{i:02}")).collect()).unwrap();
        EgoGraph::new(g, "00", EgoOrder::Second).unwrap()
    }

    fn complete(n: usize) -> EgoGraph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        ego(&e, n)
    }

    fn star(n: usize) -> EgoGraph {
        ego(&(1..n).map(|i| (0, i)).collect::<Vec<_>>(), n)
    }

    fn base() -> ClusterProfile {
        ClusterProfile {
            members: 1,
            mean_features: [0.0; Feature::COUNT],
            density_band: (0.0, 0.0),
            mean_density: 0.0,
            star_score: 0.0,
            completeness: 0.0,
            mean_triangles: 0.0,
            size_stats: SizeStats {
                min: 12,
                max: 12,
                mean: 12.0,
            },
        }
    }

    #[test]
    fn complete_graphs() {
        let p = profile_egos(&[complete(4), complete(6)]).unwrap();
        assert_eq!(p.completeness, 1.0);
        assert_eq!(p.density_band, (1.0, 1.0));
        let l = label_cluster(&p, &RuleTable::default());
        assert_eq!(l.label, Label::Prototype(Prototype::C8));
        assert!(!l.evidence.is_empty());
    }

    #[test]
    fn stars() {
        let p = profile_egos(&[star(5), star(8)]).unwrap();
        assert_eq!(p.star_score, 1.0);
        assert_eq!(p.feature(Feature::LocalTransitivity), 0.0);
        assert_eq!(label_cluster(&p, &RuleTable::default()).label, Prototype::C2.into());
    }

    #[test]
    fn half_stars_half_triangles() {
        let p = profile_egos(&[star(4), complete(3), star(6), complete(3)]).unwrap();
        assert_eq!(p.star_score, 0.5);
    }

    #[test]
    fn empty_cluster() {
        assert!(matches!(profile_cluster(&[]), Err(Error::EmptyCluster)));
    }

    #[test]
    fn density_bands() {
        let rules = RuleTable::default();
        for (d, want) in [
            (0.85, Label::Prototype(Prototype::C7)),
            (0.9, Prototype::C7.into()),
            (0.8, Prototype::C7.into()),
            (0.75, Prototype::C4.into()),
            (0.7, Prototype::C4.into()),
            (0.65, Prototype::C1.into()),
            (0.55, Prototype::C3.into()),
            (0.95, Label::Unmatched),
            (0.45, Label::Unmatched),
        ] {
            let p = ClusterProfile {
                mean_density: d,
                ..base()
            };
            assert_eq!(label_cluster(&p, &rules).label, want, "density {d}");
        }
    }

    #[test]
    fn star_with_high_betweenness() {
        let mut p = ClusterProfile {
            star_score: 0.95,
            mean_density: 0.15,
            ..base()
        };
        p.mean_features[Feature::BetweennessCentrality.index()] = 0.9;
        let l = label_cluster(&p, &RuleTable::default());
        assert_eq!(l.label, Prototype::C2.into());
        assert_eq!(l.confidence, 1.0);
    }

    #[test]
    fn priority_and_confidence() {
        // complete and star at once (impossible structurally) resolves to C8
        let p = ClusterProfile {
            completeness: 1.0,
            star_score: 1.0,
            mean_density: 1.0,
            ..base()
        };
        let l = label_cluster(&p, &RuleTable::default());
        assert_eq!(l.label, Prototype::C8.into());
        assert_eq!(l.also_matched, [Prototype::C2]);
        assert_eq!(l.confidence, 0.5);
    }

    #[test]
    fn centrality_and_sparse_rules() {
        let rules = RuleTable::default();
        let mut p = ClusterProfile {
            mean_density: 0.3,
            ..base()
        };
        p.mean_features[Feature::ClosenessCentrality.index()] = 2.5;
        p.mean_features[Feature::EigenvectorCentrality.index()] = 1.0;
        assert_eq!(label_cluster(&p, &rules).label, Prototype::C5.into());
        let p = ClusterProfile {
            mean_density: 0.3,
            mean_triangles: 2.0,
            size_stats: SizeStats {
                min: 8,
                max: 8,
                mean: 8.0,
            },
            ..base()
        };
        assert_eq!(label_cluster(&p, &rules).label, Prototype::C6.into());
    }

    #[test]
    fn label_strings() {
        for p in Prototype::ALL {
            let l = Label::from(p);
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{p}\""));
        }
        assert_eq!("unmatched".parse::<Label>().unwrap(), Label::Unmatched);
        let _ = build_graph(&[EdgeRecord::new("a", "b", 1.0)]).unwrap();
    }
}
