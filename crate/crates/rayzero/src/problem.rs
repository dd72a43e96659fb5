//! TOML problem files for `invert` and `synthesize`.
//!
//! ```toml
//! dataset = "@cs"
//! unknowns = ["7p1/2", "7p3/2"]
//! fiducials = ["6p"]
//!
//! [tail]
//! alpha_ref = 400.9
//! alpha_unc = 0.3
//!
//! [[measurement]]
//! lower = "6p3/2"
//! upper = "7p1/2"
//! omega_zero = 21570.1
//! sigma = 0.01
//! ```
//!
//! `[tail]` takes either a reference static polarizability (a.u.) or the
//! explicit constants `p_zz`, `q_xz` (a₀²·cm) and `rel_unc`. An optional
//! `[truth]` table records the strengths a synthetic file was generated from.

use std::collections::BTreeMap;
use std::path::Path;

use rayzero_core::inversion::{truncation_bound, Bracket, InversionProblem, MeasuredZero, Target};
use rayzero_core::{AtomicSystem, LevelKey, TailEstimate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundled::open_dataset;
use crate::dataset::DatasetError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dataset: String,
    pub unknowns: Vec<String>,
    #[serde(default)]
    pub fiducials: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub truth: BTreeMap<String, f64>,
    #[serde(rename = "measurement", default)]
    pub measurements: Vec<MeasurementSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailSpec {
    Reference(ReferencePolarizability),
    Explicit(ExplicitTail),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePolarizability {
    pub alpha_ref: f64,
    pub alpha_unc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitTail {
    pub p_zz: f64,
    #[serde(default)]
    pub q_xz: f64,
    pub rel_unc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<String>,
    pub upper: String,
    pub omega_zero: f64,
    pub sigma: f64,
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem file not found: {0}")]
    NotFound(String),
    #[error("cannot read problem file: {0}")]
    Io(#[from] std::io::Error),
    #[error("problem file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Core(#[from] rayzero_core::Error),
}

impl TailSpec {
    pub fn resolve(&self, system: &AtomicSystem) -> rayzero_core::Result<TailEstimate> {
        match *self {
            TailSpec::Reference(r) => truncation_bound(system, r.alpha_ref, r.alpha_unc),
            TailSpec::Explicit(e) => {
                if !(e.rel_unc >= 0.0 && e.p_zz.is_finite() && e.q_xz.is_finite()) {
                    return Err(rayzero_core::Error::InvalidProblem(
                        "tail constants must be finite with rel_unc >= 0".into(),
                    ));
                }
                Ok(TailEstimate {
                    p_zz: e.p_zz,
                    q_xz: e.q_xz,
                    rel_unc: e.rel_unc,
                })
            }
        }
    }
}

fn parse_targets(items: &[String]) -> rayzero_core::Result<Vec<Target>> {
    items.iter().map(|s| s.parse()).collect()
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files serialize")
    }

    /// The dataset with the tail (if any) attached.
    pub fn system(&self, base: Option<&Path>) -> Result<AtomicSystem, ProblemError> {
        let system = open_dataset(&self.dataset, base, None)?;
        Ok(match &self.tail {
            Some(spec) => {
                let tail = spec.resolve(&system)?;
                system.with_tail(Some(tail))
            }
            None => system,
        })
    }

    pub fn build(&self, base: Option<&Path>) -> Result<InversionProblem, ProblemError> {
        let system = self.system(base)?;
        let unknowns = parse_targets(&self.unknowns)?;
        let fiducials = parse_targets(&self.fiducials)?;
        let measurements = self
            .measurements
            .iter()
            .map(|m| {
                let bracket = Bracket {
                    lower: m.lower.as_deref().map(str::parse::<LevelKey>).transpose()?,
                    upper: m.upper.parse()?,
                };
                MeasuredZero::new(m.omega_zero, m.sigma, bracket)
            })
            .collect::<rayzero_core::Result<Vec<_>>>()?;
        Ok(InversionProblem::new(system, unknowns, fiducials, measurements)?)
    }

    /// Truth values in the order of `unknowns`, when all are recorded.
    pub fn truth_values(&self) -> Option<Vec<f64>> {
        self.unknowns.iter().map(|u| self.truth.get(u).copied()).collect()
    }
}

/// Reads a problem file; relative dataset paths resolve against its directory.
pub fn load_problem(path: &Path) -> Result<(ProblemFile, InversionProblem), ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ProblemError::NotFound(path.display().to_string())
        } else {
            ProblemError::Io(e)
        }
    })?;
    let file = ProblemFile::parse(&text)?;
    let problem = file.build(path.parent())?;
    Ok((file, problem))
}
