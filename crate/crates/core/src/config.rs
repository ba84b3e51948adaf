//! Run configuration, read from a single TOML file.
//!
//! ```toml
//! k_max = 4
//! out = "out"
//!
//! [model]
//! kind = "tfim"
//! n_qubits = 4
//! h = 1.0
//! j = 0.15
//!
//! [hierarchy]
//! mode = "pert"
//! ordering = "hierarchy"
//!
//! [sweep]
//! n_p_max = 30
//! regimes = [0.15, 6.0, 1.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{HierarchyMode, UnitOrdering};
use crate::perturbation::{Coupling, HamiltonianModel};
use crate::vqe::OptimizerOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Tfim { n_qubits: usize, h: f64, j: f64 },
    Custom { h: Vec<f64>, couplings: Vec<Coupling> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<HamiltonianModel> {
        match self {
            ModelSpec::Tfim { n_qubits, h, j } => HamiltonianModel::tfim(*n_qubits, *h, *j),
            ModelSpec::Custom { h, couplings } => HamiltonianModel::new(h.clone(), couplings.clone()),
        }
    }

    /// Model at coupling ratio `r`: TFIM gets `j = r·h`, custom couplings are multiplied by `r`.
    pub fn at_ratio(&self, r: f64) -> Result<HamiltonianModel> {
        match self {
            ModelSpec::Tfim { n_qubits, h, .. } => HamiltonianModel::tfim(*n_qubits, *h, r * h),
            ModelSpec::Custom { .. } => Ok(self.build()?.scaled(r)),
        }
    }
}

/// A hierarchy variant: mode plus ordering, written `pert`, `pert*`, `2loc*`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyTag {
    pub mode: HierarchyMode,
    pub ordering: UnitOrdering,
}

impl std::str::FromStr for HierarchyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, ordering) = match s.strip_suffix('*') {
            Some(b) => (b, UnitOrdering::Parent),
            None => (s, UnitOrdering::Hierarchy),
        };
        Ok(HierarchyTag {
            mode: base.parse()?,
            ordering,
        })
    }
}

impl std::fmt::Display for HierarchyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let star = if self.ordering == UnitOrdering::Parent { "*" } else { "" };
        write!(f, "{}{}", self.mode.name(), star)
    }
}

impl Serialize for HierarchyTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HierarchyTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyConfig {
    pub mode: HierarchyMode,
    pub ordering: UnitOrdering,
    pub tie_seed: Option<u64>,
    /// Coupling ratio at which sweep hierarchies are ranked.
    pub rank_j_over_h: f64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            mode: HierarchyMode::Pert,
            ordering: UnitOrdering::Hierarchy,
            tie_seed: None,
            rank_j_over_h: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_p_max: usize,
    pub regimes: Vec<f64>,
    pub hierarchies: Vec<HierarchyTag>,
    /// Expansion order used to rank the sweep hierarchies.
    pub k_max: u32,
    pub optimizer: OptimizerOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_p_max: 30,
            regimes: vec![0.15, 6.0, 1.0],
            hierarchies: ["pert", "pert*", "rev", "2loc", "2loc*", "loc"]
                .iter()
                .map(|s| s.parse().expect("valid tag"))
                .collect(),
            k_max: 6,
            optimizer: OptimizerOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_k_max() -> u32 {
    4
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn tfim(n_qubits: usize, h: f64, j: f64) -> Self {
        RunConfig {
            model: ModelSpec::Tfim { n_qubits, h, j },
            k_max: default_k_max(),
            hierarchy: HierarchyConfig::default(),
            sweep: SweepConfig::default(),
            out: default_out(),
        }
    }
}
