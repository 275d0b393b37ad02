use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ingest::InputFormat;
use super::window::WindowSpec;
use crate::cluster::{Algorithm, ApConfig, KMeansConfig};
use crate::error::{Error, Result};
use crate::features::{CentralityScale, SubsetId};
use crate::graph::{BackboneParams, EgoOrder};
use crate::prototypes::RuleTable;
use crate::select::{GapSdRule, KneeMetric};

/// Upper end of the searched cluster counts. Matches the number of
/// prototypes the rule table can name.
pub const DEFAULT_K_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    pub format: InputFormat,
}

/// Which feature subsets a run clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SubsetSelection {
    One(SubsetId),
    /// The eight predefined subsets.
    All,
}

impl SubsetSelection {
    pub fn ids(self) -> Vec<SubsetId> {
        match self {
            SubsetSelection::One(id) => vec![id],
            SubsetSelection::All => SubsetId::NAMED.to_vec(),
        }
    }
}

impl fmt::Display for SubsetSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetSelection::One(id) => id.fmt(f),
            SubsetSelection::All => f.write_str("all"),
        }
    }
}

impl FromStr for SubsetSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(SubsetSelection::All)
        } else {
            s.parse().map(SubsetSelection::One)
        }
    }
}

impl From<SubsetSelection> for String {
    fn from(s: SubsetSelection) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for SubsetSelection {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSelection {
    #[default]
    Gap,
    LMethod,
}

impl FromStr for KSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gap" => Ok(KSelection::Gap),
            "l-method" | "lmethod" | "knee" => Ok(KSelection::LMethod),
            _ => Err(Error::InvalidParameter(format!("unknown k-selection method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub method: KSelection,
    pub k_max: usize,
    /// Reference data sets drawn by the gap statistic.
    pub b: usize,
    pub sd_rule: GapSdRule,
    pub knee_metric: KneeMetric,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            method: KSelection::Gap,
            k_max: DEFAULT_K_MAX,
            b: 50,
            sd_rule: GapSdRule::Standard,
            knee_metric: KneeMetric::MergeDistance,
        }
    }
}

/// Per-window assignment settings; present only for temporal runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalConfig {
    pub window: WindowSpec,
    /// Subset used for the pooled fit; the run's first subset when unset.
    #[serde(default)]
    pub subset: Option<SubsetId>,
}

/// Everything that determines a pipeline run. `seed` has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
    /// Optional CSV with an `ego` column restricting which nodes are
    /// clustered; every node otherwise.
    #[serde(default)]
    pub egos: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub ego_order: EgoOrder,
    /// Backbone filter; `null` skips pruning.
    #[serde(default = "default_backbone")]
    pub backbone: Option<BackboneParams>,
    #[serde(default)]
    pub centrality_scale: CentralityScale,
    #[serde(default = "default_subsets")]
    pub subsets: SubsetSelection,
    #[serde(default = "default_fsfs_k")]
    pub fsfs_k: usize,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    #[serde(default = "default_variance_target")]
    pub variance_target: f64,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub ap: ApConfig,
    /// Fixed rule table. When unset the default thresholds are used with
    /// reference medians taken from the run's own egos.
    #[serde(default)]
    pub rules: Option<RuleTable>,
    #[serde(default)]
    pub temporal: Option<TemporalConfig>,
    #[serde(default)]
    pub strict: bool,
    /// Reuse stage outputs from `<out>/.cache`.
    #[serde(default = "yes")]
    pub cache: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_backbone() -> Option<BackboneParams> {
    Some(BackboneParams::default())
}
fn default_subsets() -> SubsetSelection {
    SubsetSelection::One(SubsetId::V)
}
fn default_fsfs_k() -> usize {
    2
}
fn default_algorithm() -> Algorithm {
    Algorithm::Hierarchical
}
fn default_variance_target() -> f64 {
    0.9
}
fn yes() -> bool {
    true
}

impl RunConfig {
    /// Defaults for everything but the seed.
    pub fn new(seed: u64) -> RunConfig {
        RunConfig {
            seed,
            inputs: Vec::new(),
            egos: None,
            out: default_out(),
            ego_order: EgoOrder::default(),
            backbone: default_backbone(),
            centrality_scale: CentralityScale::default(),
            subsets: default_subsets(),
            fsfs_k: default_fsfs_k(),
            algorithm: default_algorithm(),
            variance_target: default_variance_target(),
            selection: SelectionConfig::default(),
            kmeans: KMeansConfig::default(),
            ap: ApConfig::default(),
            rules: None,
            temporal: None,
            strict: false,
            cache: true,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = &self.backbone {
            b.validate()?;
        }
        self.ap.validate()?;
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "variance_target must lie in (0, 1], got {}",
                self.variance_target
            )));
        }
        let s = &self.selection;
        if s.k_max < 2 {
            return Err(Error::InvalidParameter("selection.k_max must be at least 2".into()));
        }
        if s.method == KSelection::Gap && s.b < 10 {
            return Err(Error::InvalidParameter("selection.b must be at least 10".into()));
        }
        if s.method == KSelection::LMethod && s.k_max < 5 {
            return Err(Error::InvalidParameter("the L-method needs selection.k_max >= 5".into()));
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return Err(Error::InvalidParameter("k-means restarts and max_iter must be positive".into()));
        }
        if self.fsfs_k == 0 {
            return Err(Error::InvalidParameter("fsfs_k must be at least 1".into()));
        }
        if let Some(t) = &self.temporal {
            t.window.validate()?;
            if t.subset == Some(SubsetId::Fsfs) && self.subsets != SubsetSelection::One(SubsetId::Fsfs) {
                return Err(Error::InvalidParameter(
                    "temporal.subset fsfs requires subsets = fsfs".into(),
                ));
            }
        }
        Ok(())
    }
}
