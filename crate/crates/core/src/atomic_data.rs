//! Level data for a one-electron-like atom scattering off its s₁/₂ ground level.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::units::cm_to_hartree;

/// Levels closer than this (cm⁻¹) share one pole for bracketing purposes.
pub const DEGENERACY_TOL_CM: f64 = 1e-6;

/// Ratio between the absorption oscillator strength and `ω·w_j·M` for an
/// s₁/₂ → p_j line (atomic units), i.e. `f = ω_au · w_j · M / C`.
const F_TO_MSQ_CONSTANT: f64 = 1.5;

/// Quantum numbers of a level; `j` is stored doubled so it stays integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelKey {
    pub n: u32,
    pub l: u32,
    pub twice_j: u32,
}

impl LevelKey {
    pub fn new(n: u32, l: u32, twice_j: u32) -> Result<Self> {
        let bad = |reason| Error::InvalidKey {
            n,
            l,
            twice_j,
            reason,
        };
        if n == 0 {
            return Err(bad("n must be positive"));
        }
        if l >= n {
            return Err(bad("l must be smaller than n"));
        }
        if twice_j != 2 * l + 1 && (l == 0 || twice_j != 2 * l - 1) {
            return Err(bad("j must equal l ± 1/2"));
        }
        Ok(LevelKey { n, l, twice_j })
    }

    /// An `np_j` level.
    pub fn p(n: u32, twice_j: u32) -> Result<Self> {
        Self::new(n, 1, twice_j)
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }
}

const ORBITAL_LETTERS: &[u8] = b"spdfgh";

impl fmt::Display for LevelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = ORBITAL_LETTERS
            .get(self.l as usize)
            .map(|&c| c as char)
            .unwrap_or('?');
        write!(f, "{}{}{}/2", self.n, letter, self.twice_j)
    }
}

impl FromStr for LevelKey {
    type Err = Error;

    /// Parses keys written like `7p3/2` or `2s1/2`.
    fn from_str(s: &str) -> Result<Self> {
        let syntax = || Error::KeySyntax(s.to_string());
        let s = s.trim();
        let letter_at = s
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(syntax)?;
        let n: u32 = s[..letter_at].parse().map_err(|_| syntax())?;
        let letter = s.as_bytes()[letter_at].to_ascii_lowercase();
        let l = ORBITAL_LETTERS
            .iter()
            .position(|&c| c == letter)
            .ok_or_else(syntax)? as u32;
        let j = &s[letter_at + 1..];
        let twice_j: u32 = j
            .strip_suffix("/2")
            .ok_or_else(syntax)?
            .parse()
            .map_err(|_| syntax())?;
        LevelKey::new(n, l, twice_j)
    }
}

/// One excited level reachable by an electric-dipole transition from the
/// ground level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitedLevel {
    pub key: LevelKey,
    /// Transition frequency from the ground level, cm⁻¹.
    pub omega: f64,
    /// Squared radial matrix element, a₀².
    pub m_sq: f64,
    pub m_sq_rel_unc: f64,
    /// Natural width, cm⁻¹. Only used to judge whether neglecting widths is safe.
    pub gamma: Option<f64>,
}

impl ExcitedLevel {
    pub fn new(key: LevelKey, omega: f64, m_sq: f64, m_sq_rel_unc: f64) -> Result<Self> {
        let level = ExcitedLevel {
            key,
            omega,
            m_sq,
            m_sq_rel_unc,
            gamma: None,
        };
        level.validate()?;
        Ok(level)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = Some(gamma);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidLevel {
                key: self.key,
                reason: reason.to_string(),
            })
        };
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return fail("transition frequency must be positive");
        }
        if !(self.m_sq > 0.0 && self.m_sq.is_finite()) {
            return fail("squared matrix element must be positive");
        }
        if !(self.m_sq_rel_unc >= 0.0 && self.m_sq_rel_unc.is_finite()) {
            return fail("relative uncertainty must be non-negative");
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return fail("natural width must be non-negative");
            }
        }
        Ok(())
    }

    /// Angular weight in the parallel-polarization sum: 2 for j = 3/2, 1 for j = 1/2.
    pub(crate) fn zz_weight(&self) -> f64 {
        match self.key.twice_j {
            3 => 2.0 * self.m_sq,
            _ => self.m_sq,
        }
    }

    /// Signed weight in the crossed-polarization sum: +M for j = 3/2, −M for j = 1/2.
    pub(crate) fn xz_weight(&self) -> f64 {
        match self.key.twice_j {
            3 => self.m_sq,
            _ => -self.m_sq,
        }
    }
}

/// Constant-in-ω stand-in for every level beyond the loaded set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    /// Added to the parallel-polarization level sum, a₀²·cm.
    pub p_zz: f64,
    /// Added to the crossed-polarization level sum, a₀²·cm.
    pub q_xz: f64,
    pub rel_unc: f64,
}

impl TailEstimate {
    pub fn scaled(&self, factor: f64) -> Self {
        TailEstimate {
            p_zz: self.p_zz * factor,
            q_xz: self.q_xz * factor,
            rel_unc: self.rel_unc,
        }
    }
}

/// A distinct resonance frequency, possibly shared by degenerate levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub omega: f64,
    /// Indices into [`AtomicSystem::levels`].
    pub members: Vec<usize>,
}

/// Ground level plus the ordered set of intermediate levels summed over.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSystem {
    species: String,
    ground: LevelKey,
    levels: Vec<ExcitedLevel>,
    tail: Option<TailEstimate>,
    poles: Vec<Pole>,
}

impl AtomicSystem {
    pub fn new(
        species: impl Into<String>,
        mut levels: Vec<ExcitedLevel>,
        tail: Option<TailEstimate>,
    ) -> Result<Self> {
        for level in &levels {
            level.validate()?;
            if level.key.l != 1 {
                return Err(Error::InvalidLevel {
                    key: level.key,
                    reason: "only p levels couple to the s ground level".to_string(),
                });
            }
        }
        levels.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.key.cmp(&b.key)));
        let mut keys: Vec<LevelKey> = levels.iter().map(|l| l.key).collect();
        keys.sort();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLevel(w[0]));
        }
        let poles = group_poles(&levels);
        Ok(AtomicSystem {
            species: species.into(),
            ground: LevelKey {
                n: 0,
                l: 0,
                twice_j: 1,
            },
            levels,
            tail,
            poles,
        })
    }

    /// Sets the principal quantum number of the s₁/₂ ground level (display only).
    pub fn with_ground_n(mut self, n: u32) -> Result<Self> {
        self.ground = LevelKey::new(n, 0, 1)?;
        Ok(self)
    }

    pub fn species(&self) -> &str {
        &self.species
    }

    pub fn ground(&self) -> LevelKey {
        self.ground
    }

    /// Levels sorted ascending by frequency.
    pub fn levels(&self) -> &[ExcitedLevel] {
        &self.levels
    }

    pub fn tail(&self) -> Option<&TailEstimate> {
        self.tail.as_ref()
    }

    /// True when no tail estimate is attached, i.e. the level sums are truncated.
    pub fn is_truncated(&self) -> bool {
        self.tail.is_none()
    }

    /// Distinct poles, strictly increasing.
    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn with_tail(mut self, tail: Option<TailEstimate>) -> Self {
        self.tail = tail;
        self
    }

    pub fn level(&self, key: LevelKey) -> Option<&ExcitedLevel> {
        self.levels.iter().find(|l| l.key == key)
    }

    pub fn multiplet(&self, n: u32) -> impl Iterator<Item = &ExcitedLevel> {
        self.levels.iter().filter(move |l| l.key.n == n)
    }

    /// Principal quantum numbers present, ordered by their lowest component.
    pub fn multiplet_numbers(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for level in &self.levels {
            if !out.contains(&level.key.n) {
                out.push(level.key.n);
            }
        }
        out
    }

    /// The multiplet with the lowest-lying component (the resonance line).
    pub fn resonance_multiplet(&self) -> Option<u32> {
        self.levels.first().map(|l| l.key.n)
    }

    /// Frequency offsets for multiplet `n` are quoted against its j = 3/2
    /// component, or the sole component when only one is loaded.
    pub fn reference_level(&self, n: u32) -> Result<&ExcitedLevel> {
        let mut best: Option<&ExcitedLevel> = None;
        for level in self.multiplet(n) {
            if best.is_none_or(|b| level.key.twice_j > b.key.twice_j) {
                best = Some(level);
            }
        }
        best.ok_or(Error::MultipletAbsent(n))
    }

    /// Fine-structure splitting ω(n, 3/2) − ω(n, 1/2); zero for a single component.
    pub fn fs_splitting(&self, n: u32) -> Result<f64> {
        let mut upper = None;
        let mut lower = None;
        for level in self.multiplet(n) {
            match level.key.twice_j {
                3 => upper = Some(level.omega),
                _ => lower = Some(level.omega),
            }
        }
        match (upper, lower) {
            (Some(u), Some(l)) => Ok(u - l),
            (Some(_), None) | (None, Some(_)) => Ok(0.0),
            (None, None) => Err(Error::MultipletAbsent(n)),
        }
    }

    /// Index of the pole carrying `key`.
    pub fn pole_of(&self, key: LevelKey) -> Result<usize> {
        let idx = self
            .levels
            .iter()
            .position(|l| l.key == key)
            .ok_or(Error::LevelAbsent(key))?;
        Ok(self
            .poles
            .iter()
            .position(|p| p.members.contains(&idx))
            .expect("every level belongs to a pole"))
    }

    /// Rebuilds the system with each level's `m_sq` replaced by `f(level)`.
    pub fn map_strengths(&self, mut f: impl FnMut(&ExcitedLevel) -> f64) -> Result<Self> {
        let levels = self
            .levels
            .iter()
            .map(|l| {
                let mut out = l.clone();
                out.m_sq = f(l);
                out.validate()?;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AtomicSystem {
            poles: group_poles(&levels),
            levels,
            species: self.species.clone(),
            ground: self.ground,
            tail: self.tail,
        })
    }

    /// Keeps only the listed multiplets and drops the tail.
    pub fn retain_multiplets(&self, keep: &[u32]) -> Result<Self> {
        let levels: Vec<ExcitedLevel> = self
            .levels
            .iter()
            .filter(|l| keep.contains(&l.key.n))
            .cloned()
            .collect();
        AtomicSystem::new(self.species.clone(), levels, None)
            .map(|s| AtomicSystem { ground: self.ground, ..s })
    }
}

fn group_poles(levels: &[ExcitedLevel]) -> Vec<Pole> {
    let mut poles: Vec<Pole> = Vec::new();
    for (idx, level) in levels.iter().enumerate() {
        match poles.last_mut() {
            Some(pole) if level.omega - levels[pole.members[0]].omega < DEGENERACY_TOL_CM => {
                pole.members.push(idx);
            }
            _ => poles.push(Pole {
                omega: level.omega,
                members: alloc::vec![idx],
            }),
        }
    }
    for pole in &mut poles {
        if pole.members.len() > 1 {
            let (mut num, mut den) = (0.0, 0.0);
            for &i in &pole.members {
                num += levels[i].zz_weight() * levels[i].omega;
                den += levels[i].zz_weight();
            }
            pole.omega = num / den;
        }
    }
    poles
}

fn angular_weight(twice_j: u32) -> Result<f64> {
    match twice_j {
        1 => Ok(1.0 / 3.0),
        3 => Ok(2.0 / 3.0),
        _ => Err(Error::InvalidKey {
            n: 0,
            l: 1,
            twice_j,
            reason: "only p1/2 and p3/2 lines are supported",
        }),
    }
}

/// Absorption oscillator strength of an s₁/₂ → p_j line to squared radial
/// matrix element (a₀²): `M = f·C / (ω_au·w_j)` with `w_j = (2j+1)/6`, `C = 3/2`.
pub fn f_to_msq(f: f64, omega_cm: f64, twice_j: u32) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::NonPositive {
            what: "oscillator strength",
            value: f,
        });
    }
    if !(omega_cm > 0.0) {
        return Err(Error::NonPositive {
            what: "transition frequency",
            value: omega_cm,
        });
    }
    Ok(f * F_TO_MSQ_CONSTANT / (cm_to_hartree(omega_cm) * angular_weight(twice_j)?))
}

/// Inverse of [`f_to_msq`].
pub fn msq_to_f(m_sq: f64, omega_cm: f64, twice_j: u32) -> Result<f64> {
    if !(m_sq > 0.0) {
        return Err(Error::NonPositive {
            what: "squared matrix element",
            value: m_sq,
        });
    }
    if !(omega_cm > 0.0) {
        return Err(Error::NonPositive {
            what: "transition frequency",
            value: omega_cm,
        });
    }
    Ok(m_sq * cm_to_hartree(omega_cm) * angular_weight(twice_j)? / F_TO_MSQ_CONSTANT)
}
