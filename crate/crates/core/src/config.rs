//! JSON experiment documents read by the command-line tool.

use crate::capacity::BoundarySet;
use crate::cell::{AlphaSearch, CellParams};
use crate::error::{Error, Result};
use crate::homogenize::StudyConfig;
use crate::numerics::FractionalOrder;
use crate::perforations::GammaLaw;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Schema version accepted by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    pub order: FractionalOrder,
    pub set: BoundarySet,
    /// Boundary nodes across the set's diameter.
    #[serde(default = "default_nodes_across")]
    pub nodes_across: usize,
    /// Truncation radii as multiples of the diameter.
    #[serde(default = "default_r_out_factors")]
    pub r_out_factors: Vec<f64>,
    /// Also compute the set dilated by 2 at the same spacing.
    #[serde(default = "yes")]
    pub scaling: bool,
    /// Far-field probe heights as multiples of the diameter.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub far_field: Vec<f64>,
    #[serde(default = "default_capacity_tol")]
    pub tol: f64,
}

fn default_nodes_across() -> usize {
    16
}
fn default_r_out_factors() -> Vec<f64> {
    vec![8.0, 16.0, 32.0]
}
fn yes() -> bool {
    true
}
fn default_capacity_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub order: FractionalOrder,
    pub law: GammaLaw,
    /// Window size in lattice cells.
    pub t: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub params: CellParams,
    #[serde(default)]
    pub search: AlphaSearch,
    /// Extra `α` values whose contact fractions are reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scan: Vec<f64>,
}

/// Single perforated solve picked out of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveTarget {
    pub eps: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Overrides the solver tolerance of whichever section runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveTarget>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "config version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.version
            )));
        }
        if cfg.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::config("tol must be positive"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn capacity(&self) -> Result<CapacityConfig> {
        let mut c = self.capacity.clone().ok_or_else(|| Error::config("config has no `capacity` section"))?;
        if let Some(t) = self.tol {
            c.tol = t;
        }
        Ok(c)
    }

    pub fn cell(&self) -> Result<CellConfig> {
        let mut c = self.cell.clone().ok_or_else(|| Error::config("config has no `cell` section"))?;
        if let Some(t) = self.tol {
            c.params.tol = t;
        }
        Ok(c)
    }

    pub fn study(&self) -> Result<StudyConfig> {
        let mut c = self.study.clone().ok_or_else(|| Error::config("config has no `study` section"))?;
        if let Some(t) = self.tol {
            c.tol = t;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(ExperimentConfig::from_json(r#"{"version": 1}"#).is_ok());
        assert!(ExperimentConfig::from_json(r#"{"version": 1, "colour": 2}"#).unwrap_err().is_config());
        assert!(ExperimentConfig::from_json(r#"{"version": 7}"#).unwrap_err().is_config());
        let nested = r#"{"version": 1, "cell": {"order": {"n": 1, "s": 0.25},
            "law": {"kind": {"type": "constant", "gamma": 1.0}}, "t": 8, "seeds": [0], "extra": 1}}"#;
        assert!(ExperimentConfig::from_json(nested).is_err());
    }

    #[test]
    fn tol_override_reaches_sections() {
        let text = r#"{"version": 1, "tol": 1e-7, "cell": {"order": {"n": 1, "s": 0.25},
            "law": {"kind": {"type": "constant", "gamma": 1.0}}, "t": 8, "seeds": [0, 1]}}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.cell().unwrap().params.tol, 1e-7);
        assert!(c.study().is_err());
    }
}
