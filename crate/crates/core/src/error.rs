use alloc::string::String;

use thiserror::Error;

use crate::atomic_data::LevelKey;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid level key n={n} l={l} 2j={twice_j}: {reason}")]
    InvalidKey {
        n: u32,
        l: u32,
        twice_j: u32,
        reason: &'static str,
    },
    #[error("cannot parse level key `{0}`")]
    KeySyntax(String),
    #[error("level {key}: {reason}")]
    InvalidLevel { key: LevelKey, reason: String },
    #[error("duplicate level {0}")]
    DuplicateLevel(LevelKey),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("multiplet n={0} is not present in the system")]
    MultipletAbsent(u32),
    #[error("level {0} is not present in the system")]
    LevelAbsent(LevelKey),
    #[error(
        "omega = {omega} cm-1 lies {distance:.3e} cm-1 from the pole of {pole} \
         (guard band {guard} cm-1)"
    )]
    GuardBand {
        omega: f64,
        pole: LevelKey,
        distance: f64,
        guard: f64,
    },
    #[error("depolarization undefined at omega = {0} cm-1: both intensities vanish")]
    UndefinedDepolarization(f64),
    #[error("no grid point survived the guard band ({rejected} rejected)")]
    EmptyGrid { rejected: usize },
    #[error("invalid frequency range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error(
        "no sign change of A_zz between poles at {lo} and {hi} cm-1 although one is \
         guaranteed; the level data is probably corrupt"
    )]
    NoSignChange { lo: f64, hi: f64 },
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },
    #[error("vanishing denominator in {0}")]
    VanishingDenominator(&'static str),
    #[error("rank deficiency: {0}")]
    RankDeficient(String),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoSignChange { .. }
                | Error::NonConvergence { .. }
                | Error::VanishingDenominator(_)
                | Error::RankDeficient(_)
        )
    }
}
