//! The six per-mesra phonetic measures.
//!
//! Each measure implements [`Metric`] and is registered under its name in
//! [`registry`]. [`metric_vector`] evaluates the full set in the canonical
//! order (hardness, sonority, sibilance, vowel ratio, entropy, cluster
//! ratio), which is also the axis order of fingerprint plots.

mod measures;
pub mod rows;

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phonology::{annotate, FeatureTable, PhonemeFeature, SymbolStream};

pub use measures::{cluster_ratio, entropy, hardness, sibilance, sonority, vowel_ratio};
pub use rows::{compute_rows, MetricReject, MetricRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Hardness,
    Sonority,
    Sibilance,
    VowelRatio,
    Entropy,
    ClusterRatio,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Hardness,
        MetricKind::Sonority,
        MetricKind::Sibilance,
        MetricKind::VowelRatio,
        MetricKind::Entropy,
        MetricKind::ClusterRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Hardness => "hardness",
            MetricKind::Sonority => "sonority",
            MetricKind::Sibilance => "sibilance",
            MetricKind::VowelRatio => "vowel_ratio",
            MetricKind::Entropy => "entropy",
            MetricKind::ClusterRatio => "cluster_ratio",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Hardness => "hardness",
            MetricKind::Sonority => "sonority",
            MetricKind::Sibilance => "sibilance",
            MetricKind::VowelRatio => "vowel ratio",
            MetricKind::Entropy => "entropy",
            MetricKind::ClusterRatio => "cluster ratio",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "metric",
                name: s.to_string(),
                available: MetricKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            })
    }
}

/// A mesra as seen by a metric: its stream and the feature record of each
/// segment in order.
pub struct MesraView<'a> {
    pub stream: &'a SymbolStream,
    pub features: Vec<&'a PhonemeFeature>,
    pub table: &'a FeatureTable,
}

impl<'a> MesraView<'a> {
    pub fn new(stream: &'a SymbolStream, table: &'a FeatureTable) -> Self {
        MesraView {
            stream,
            features: annotate(stream, table),
            table,
        }
    }
}

/// One phonetic measure over a non-empty mesra. `None` means the measure is
/// undefined for this mesra (only sibilance without consonants).
pub trait Metric: Send + Sync {
    fn kind(&self) -> MetricKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    fn compute(&self, mesra: &MesraView<'_>) -> Result<Option<f64>>;
}

macro_rules! feature_metric {
    ($ty:ident, $kind:expr, |$m:ident| $body:expr) => {
        #[derive(Debug, Clone, Copy, Default)]
        pub struct $ty;

        impl Metric for $ty {
            fn kind(&self) -> MetricKind {
                $kind
            }
            fn compute(&self, $m: &MesraView<'_>) -> Result<Option<f64>> {
                $body
            }
        }
    };
}

feature_metric!(Hardness, MetricKind::Hardness, |m| hardness(&m.features).map(Some));
feature_metric!(Sonority, MetricKind::Sonority, |m| sonority(&m.features).map(Some));
feature_metric!(Sibilance, MetricKind::Sibilance, |m| Ok(sibilance(&m.features)));
feature_metric!(VowelRatio, MetricKind::VowelRatio, |m| vowel_ratio(&m.features).map(Some));
feature_metric!(Entropy, MetricKind::Entropy, |m| entropy(m.stream).map(Some));
feature_metric!(ClusterRatio, MetricKind::ClusterRatio, |m| cluster_ratio(m.stream, m.table).map(Some));

static REGISTRY: LazyLock<Vec<Box<dyn Metric>>> = LazyLock::new(|| {
    vec![
        Box::new(Hardness),
        Box::new(Sonority),
        Box::new(Sibilance),
        Box::new(VowelRatio),
        Box::new(Entropy),
        Box::new(ClusterRatio),
    ]
});

/// All registered metrics, in canonical order.
pub fn registry() -> &'static [Box<dyn Metric>] {
    &REGISTRY
}

pub fn metric(name: &str) -> Result<&'static dyn Metric> {
    let kind: MetricKind = name.parse()?;
    Ok(REGISTRY.iter().find(|m| m.kind() == kind).expect("every kind registered").as_ref())
}

/// The six measures of one mesra plus its length descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub hardness: f64,
    pub sonority: f64,
    /// `None` when the mesra has no consonants.
    pub sibilance: Option<f64>,
    pub vowel_ratio: f64,
    pub cluster_ratio: f64,
    pub entropy: f64,
    pub n_symbols: usize,
    pub n_tokens: usize,
}

impl MetricVector {
    pub fn get(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::Hardness => Some(self.hardness),
            MetricKind::Sonority => Some(self.sonority),
            MetricKind::Sibilance => self.sibilance,
            MetricKind::VowelRatio => Some(self.vowel_ratio),
            MetricKind::Entropy => Some(self.entropy),
            MetricKind::ClusterRatio => Some(self.cluster_ratio),
        }
    }
}

pub fn metric_vector(stream: &SymbolStream, table: &FeatureTable) -> Result<MetricVector> {
    let view = MesraView::new(stream, table);
    if view.features.is_empty() {
        return Err(Error::Reject("empty symbol stream".into()));
    }
    let mut values = [None; 6];
    for (slot, m) in values.iter_mut().zip(registry()) {
        *slot = m.compute(&view)?;
    }
    let req = |i: usize| values[i].expect("only sibilance may be undefined");
    Ok(MetricVector {
        hardness: req(0),
        sonority: req(1),
        sibilance: values[2],
        vowel_ratio: req(3),
        entropy: req(4),
        cluster_ratio: req(5),
        n_symbols: view.features.len(),
        n_tokens: stream.n_tokens(),
    })
}
