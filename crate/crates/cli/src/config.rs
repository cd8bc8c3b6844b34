//! Experiment configuration: a sectioned TOML file, with command-line
//! overrides applied on top.
//!
//! ```toml
//! [run]
//! seed = 20240611
//!
//! [potential]
//! family = "pareto"
//! alpha = 0.5
//! z_min = 1.0
//!
//! [mc]
//! betas = [0.05]
//! ns = [8, 12, 16, 20, 24]
//! samples = 20000
//! ```
//!
//! Every section and key is optional; missing ones take the values of
//! [`ExperimentConfig::default`].

use std::path::{Path, PathBuf};

use rwrp_core::environment::PotentialSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub potential: PotentialSpec,
    pub theory: TheorySection,
    pub qd: QdSection,
    pub mc: McSection,
    pub green: GreenSection,
    pub oracle: OracleSection,
    pub selftest: SelftestSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads; 0 keeps the runtime default.
    pub workers: usize,
    pub out: PathBuf,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub betas: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    /// Points of the logarithmic `f` table on `[z_min, z_max]`.
    pub f_points: usize,
    pub f_z_min: f64,
    pub f_z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdSection {
    pub dims: Vec<usize>,
    pub walks: u64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub betas: Vec<f64>,
    pub ns: Vec<i64>,
    pub samples: u64,
    pub tilt: bool,
    /// Step budget per path; absent selects the library default.
    pub cap: Option<usize>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenSection {
    pub betas: Vec<f64>,
    pub ns: Vec<i64>,
    pub environments: usize,
    pub margin: i64,
    pub tol: f64,
    /// Boxes used for the solver versus series check.
    pub fk_boxes: usize,
    pub fk_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Enumeration needs an atomic law, so the oracle has its own.
    pub potential: PotentialSpec,
    pub betas: Vec<f64>,
    pub ns: Vec<i64>,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestSection {
    /// Criteria to run; empty runs all of them.
    pub criteria: Vec<u8>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            run: RunSection::default(),
            potential: PotentialSpec::pareto(0.5, 1.0),
            theory: TheorySection::default(),
            qd: QdSection::default(),
            mc: McSection::default(),
            green: GreenSection::default(),
            oracle: OracleSection::default(),
            selftest: SelftestSection::default(),
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 20_240_611,
            workers: 0,
            out: PathBuf::from("rwrp-out"),
            d: 3,
        }
    }
}

impl Default for TheorySection {
    fn default() -> Self {
        TheorySection {
            betas: vec![0.01, 0.05, 0.2],
            epsilon: 0.1,
            delta: 0.05,
            f_points: 61,
            f_z_min: 1e-4,
            f_z_max: 1e2,
        }
    }
}

impl Default for QdSection {
    fn default() -> Self {
        QdSection {
            dims: vec![3, 4, 5],
            walks: 200_000,
            radius: 12.0,
        }
    }
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            betas: vec![0.05],
            ns: vec![8, 12, 16, 20, 24],
            samples: 20_000,
            tilt: true,
            cap: None,
            epsilon: 0.25,
        }
    }
}

impl Default for GreenSection {
    fn default() -> Self {
        GreenSection {
            betas: vec![0.05],
            ns: (4..=16).collect(),
            environments: 40,
            margin: 8,
            tol: 1e-10,
            fk_boxes: 3,
            fk_terms: 400,
        }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            potential: PotentialSpec::atoms(&[(0.0, 0.5), (3.0, 0.5)]),
            betas: vec![0.5],
            ns: vec![1, 2],
            max_len: 9,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory
    /// and the worker count, which do not affect results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.out = PathBuf::new();
        canonical.run.workers = 0;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Rejects empty or malformed lists before any work starts.
pub fn require_betas(name: &str, betas: &[f64]) -> Result<(), String> {
    if betas.is_empty() {
        return Err(format!("{name}.betas is empty"));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(format!("{name}.betas contains {b}; need finite positive values"));
    }
    Ok(())
}

pub fn require_ns(name: &str, ns: &[i64]) -> Result<(), String> {
    if ns.is_empty() {
        return Err(format!("{name}.ns is empty"));
    }
    if let Some(n) = ns.iter().find(|n| **n < 1) {
        return Err(format!("{name}.ns contains {n}; need positive distances"));
    }
    Ok(())
}
