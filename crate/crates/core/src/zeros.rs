//! Zeros of the parallel-polarization amplitude.
//!
//! With every strength positive, `A_zz` runs from −∞ to +∞ across each open
//! interval between adjacent poles, so each such gap holds a zero. Gaps are
//! taken from the full pole list, which also covers zeros sitting below the
//! lower component of a fine-structure multiplet.

use alloc::vec::Vec;

use crate::amplitude::{raw_amplitude, Polarization};
use crate::atomic_data::{AtomicSystem, LevelKey};
use crate::compensated::{quotient, Accumulator, TwoFloat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZeroMethod {
    /// Root of the full level sum.
    Numerical,
    /// Root of the sum truncated to the resonance multiplet and the
    /// multiplet above the gap.
    NumericalResonanceOnly,
    /// Leading-order closed form `(2M₃/₂ + M₁/₂) / P_zz^n`.
    ApproxAnalytic,
}

impl ZeroMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ZeroMethod::Numerical => "numerical",
            ZeroMethod::NumericalResonanceOnly => "resonance_only",
            ZeroMethod::ApproxAnalytic => "approx_analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRecord {
    pub omega_zero: f64,
    /// Enclosing poles; the lower bound is 0 below the first pole.
    pub bracket: (f64, f64),
    /// Level the offset is measured from.
    pub reference: LevelKey,
    pub reference_omega: f64,
    /// `omega_zero − reference_omega`, cm⁻¹.
    pub offset: f64,
    pub method: ZeroMethod,
    /// `|A_zz(omega_zero)|` in the system the root was computed for.
    pub residual: f64,
}

impl ZeroRecord {
    /// Re-expresses the offset against another level of `system`.
    pub fn relative_to(mut self, system: &AtomicSystem, key: LevelKey) -> Result<Self> {
        let level = system.level(key).ok_or(Error::LevelAbsent(key))?;
        self.reference = key;
        self.reference_omega = level.omega;
        self.offset = self.omega_zero - level.omega;
        Ok(self)
    }

    /// Ratio of the reference level's natural width to `|offset|`, if known.
    pub fn width_ratio(&self, system: &AtomicSystem) -> Option<f64> {
        let gamma = system.level(self.reference)?.gamma?;
        Some(gamma / self.offset.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bisection stops once the bracket is this narrow, cm⁻¹.
    pub abs_tol_omega: f64,
    pub max_iter: usize,
    /// Pre-scan samples per gap used to detect extra sign changes.
    pub scan_points_per_gap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            abs_tol_omega: 1e-8,
            max_iter: 200,
            scan_points_per_gap: 1024,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol_omega > 0.0) {
            return Err(Error::NonPositive {
                what: "abs_tol_omega",
                value: self.abs_tol_omega,
            });
        }
        if self.max_iter == 0 {
            return Err(Error::NonPositive {
                what: "max_iter",
                value: 0.0,
            });
        }
        if self.scan_points_per_gap == 0 {
            return Err(Error::NonPositive {
                what: "scan_points_per_gap",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Output of [`find_zeros`]: roots ascending, plus gaps where the pre-scan
/// saw more than one sign change.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroSearch {
    pub zeros: Vec<ZeroRecord>,
    pub multi_root_gaps: Vec<(f64, f64)>,
}

/// An open interval between adjacent poles (or between 0 and the first pole).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gap {
    pub lo: f64,
    pub hi: f64,
    /// Pole index of the upper bound.
    pub upper_pole: usize,
    /// A zero is guaranteed (both bounds are poles).
    pub guaranteed: bool,
}

pub(crate) fn gaps(system: &AtomicSystem) -> Vec<Gap> {
    let poles = system.poles();
    let mut out = Vec::with_capacity(poles.len());
    let mut lo = 0.0;
    for (idx, pole) in poles.iter().enumerate() {
        out.push(Gap {
            lo,
            hi: pole.omega,
            upper_pole: idx,
            guaranteed: idx > 0,
        });
        lo = pole.omega;
    }
    out
}

fn edge_offset(gap: &Gap) -> f64 {
    let width = gap.hi - gap.lo;
    (width * 1e-10).max(4.0 * crate::atomic_data::DEGENERACY_TOL_CM.min(width * 1e-3))
}

fn zz(system: &AtomicSystem, omega: f64) -> f64 {
    raw_amplitude(system, omega, Polarization::ZZ)
}

/// Bisection down to `abs_tol_omega`, then a bracketed secant polish.
fn refine(
    system: &AtomicSystem,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let mut iterations = 0;
    while hi - lo > config.abs_tol_omega {
        if iterations >= config.max_iter {
            return Err(Error::NonConvergence {
                what: "bisection",
                iterations,
            });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = zz(system, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mut f_hi = zz(system, hi);
    // Illinois false position; the bracket is kept at every step.
    let mut side = 0i8;
    for _ in 0..60 {
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 {
            return Ok(hi);
        }
        let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            break;
        }
        let fx = zz(system, x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let (a, b) = (zz(system, lo).abs(), zz(system, hi).abs());
    Ok(if a <= b { lo } else { hi })
}

/// Every root of `A_zz` inside `gap`, with a flag for extra sign changes.
pub(crate) fn roots_in_gap(
    system: &AtomicSystem,
    gap: &Gap,
    config: &SolverConfig,
) -> Result<(Vec<f64>, bool)> {
    let edge = edge_offset(gap);
    let start = gap.lo + edge;
    let end = gap.hi - edge;
    let n = config.scan_points_per_gap.max(1);
    let mut roots = Vec::new();
    let mut prev_x = start;
    let mut prev_f = zz(system, start);
    for k in 1..=n {
        let x = if k == n {
            end
        } else {
            start + (end - start) * (k as f64 / n as f64)
        };
        let f = zz(system, x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if f != 0.0 && (f < 0.0) != (prev_f < 0.0) {
            roots.push(refine(system, prev_x, x, prev_f, config)?);
        }
        prev_x = x;
        prev_f = f;
    }
    if prev_f == 0.0 {
        roots.push(prev_x);
    }
    if roots.is_empty() && gap.guaranteed {
        return Err(Error::NoSignChange {
            lo: gap.lo,
            hi: gap.hi,
        });
    }
    let multiple = roots.len() > 1;
    Ok((roots, multiple))
}

/// The root in a guaranteed gap without the dense pre-scan. `A_zz` is strictly
/// increasing between poles when all strengths are positive, so the root is
/// unique and the gap edges already bracket it.
pub(crate) fn unique_root_in_gap(
    system: &AtomicSystem,
    gap: &Gap,
    config: &SolverConfig,
) -> Result<f64> {
    let edge = edge_offset(gap);
    let (lo, hi) = (gap.lo + edge, gap.hi - edge);
    let (f_lo, f_hi) = (zz(system, lo), zz(system, hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(Error::NoSignChange {
            lo: gap.lo,
            hi: gap.hi,
        });
    }
    refine(system, lo, hi, f_lo, config)
}

fn upper_key(system: &AtomicSystem, gap: &Gap) -> LevelKey {
    let pole = &system.poles()[gap.upper_pole];
    system.levels()[pole.members[0]].key
}

fn record(
    system: &AtomicSystem,
    omega_zero: f64,
    gap: &Gap,
    method: ZeroMethod,
) -> ZeroRecord {
    let reference = upper_key(system, gap);
    ZeroRecord {
        omega_zero,
        bracket: (gap.lo, gap.hi),
        reference,
        reference_omega: gap.hi,
        offset: omega_zero - gap.hi,
        method,
        residual: zz(system, omega_zero).abs(),
    }
}

fn check_range(range: (f64, f64)) -> Result<()> {
    let (lo, hi) = range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidRange { lo, hi });
    }
    Ok(())
}

fn intersects(gap: &Gap, range: (f64, f64)) -> bool {
    gap.lo < range.1 && gap.hi > range.0
}

/// All zeros of `A_zz` lying in `range`, searched gap by gap.
///
/// Offsets are quoted against the pole closing each gap from above. Frequencies
/// above the highest loaded pole are not searched.
pub fn find_zeros(
    system: &AtomicSystem,
    range: (f64, f64),
    config: &SolverConfig,
) -> Result<ZeroSearch> {
    check_range(range)?;
    config.validate()?;
    let mut out = ZeroSearch::default();
    for gap in gaps(system).iter().filter(|g| intersects(g, range)) {
        let (roots, multiple) = roots_in_gap(system, gap, config)?;
        if multiple {
            out.multi_root_gaps.push((gap.lo, gap.hi));
        }
        out.zeros.extend(
            roots
                .into_iter()
                .filter(|r| *r >= range.0 && *r <= range.1)
                .map(|r| record(system, r, gap, ZeroMethod::Numerical)),
        );
    }
    out.zeros
        .sort_by(|a, b| a.omega_zero.total_cmp(&b.omega_zero));
    Ok(out)
}

/// The subsystem holding only the resonance multiplet and multiplet `n`.
pub fn resonance_only_system(system: &AtomicSystem, n: u32) -> Result<AtomicSystem> {
    let resonance = system
        .resonance_multiplet()
        .ok_or(Error::MultipletAbsent(n))?;
    system.reference_level(n)?;
    system.retain_multiplets(&[resonance, n])
}

/// As [`find_zeros`], but each gap's root is taken from the system truncated
/// to the resonance multiplet plus the multiplet closing the gap from above.
pub fn find_zeros_resonance_only(
    system: &AtomicSystem,
    range: (f64, f64),
    config: &SolverConfig,
) -> Result<ZeroSearch> {
    check_range(range)?;
    config.validate()?;
    let mut out = ZeroSearch::default();
    for gap in gaps(system).iter().filter(|g| intersects(g, range)) {
        let key = upper_key(system, gap);
        let truncated = resonance_only_system(system, key.n)?;
        let sub_pole = truncated.pole_of(key)?;
        let sub_gap = gaps(&truncated)[sub_pole];
        let (roots, multiple) = roots_in_gap(&truncated, &sub_gap, config)?;
        if multiple {
            out.multi_root_gaps.push((sub_gap.lo, sub_gap.hi));
        }
        out.zeros.extend(
            roots
                .into_iter()
                .filter(|r| *r >= range.0 && *r <= range.1)
                .map(|r| record(&truncated, r, &sub_gap, ZeroMethod::NumericalResonanceOnly)),
        );
    }
    out.zeros
        .sort_by(|a, b| a.omega_zero.total_cmp(&b.omega_zero));
    out.zeros.dedup_by(|a, b| a.omega_zero == b.omega_zero);
    Ok(out)
}

/// The single zero in the gap closed from above by pole `upper_pole`
/// (an index into [`AtomicSystem::poles`]). The first pole has no lower
/// neighbour, so `upper_pole` must be at least 1.
pub fn zero_below_pole(
    system: &AtomicSystem,
    upper_pole: usize,
    config: &SolverConfig,
) -> Result<ZeroRecord> {
    config.validate()?;
    let all = gaps(system);
    let gap = match all.get(upper_pole) {
        Some(g) if g.guaranteed => *g,
        _ => {
            return Err(Error::InvalidProblem(alloc::format!(
                "pole {upper_pole} does not close an inter-pole gap"
            )))
        }
    };
    let root = unique_root_in_gap(system, &gap, config)?;
    Ok(record(system, root, &gap, ZeroMethod::Numerical))
}

/// The zero closing in on multiplet `n` from below: the root in the gap whose
/// upper pole is the lowest component of `n`. Offset is quoted against the
/// multiplet's reference (j = 3/2) level.
pub fn zero_below_multiplet(
    system: &AtomicSystem,
    n: u32,
    method: ZeroMethod,
    config: &SolverConfig,
) -> Result<ZeroRecord> {
    config.validate()?;
    let reference = system.reference_level(n)?.key;
    let target = match method {
        ZeroMethod::ApproxAnalytic => return approx_zero(system, n),
        ZeroMethod::Numerical => system.clone(),
        ZeroMethod::NumericalResonanceOnly => resonance_only_system(system, n)?,
    };
    let lowest = target
        .multiplet(n)
        .next()
        .ok_or(Error::MultipletAbsent(n))?
        .key;
    let gap = gaps(&target)[target.pole_of(lowest)?];
    let (roots, _) = roots_in_gap(&target, &gap, config)?;
    let root = *roots.last().ok_or(Error::NoSignChange {
        lo: gap.lo,
        hi: gap.hi,
    })?;
    record(&target, root, &gap, method).relative_to(&target, reference)
}

fn remote_sum(system: &AtomicSystem, n: u32, omega: f64) -> f64 {
    // Σ_{i≠n} 2ω_i(2M₃/₂ + M₁/₂)/(ω_i² − ω²) via partial fractions, plus tail.
    let mut acc = Accumulator::default();
    for level in system.levels().iter().filter(|l| l.key.n != n) {
        let w = level.zz_weight();
        acc.add_pair(quotient(w, TwoFloat::exact_sum(level.omega, -omega)));
        acc.add_pair(quotient(w, TwoFloat::exact_sum(level.omega, omega)));
    }
    if let Some(tail) = system.tail() {
        acc.add(tail.p_zz);
    }
    acc.value()
}

/// Closed-form zero location next to multiplet `n`:
/// `ω_on − ω_n = (2M₃/₂ + M₁/₂) / P_zz^n`, with the remote sum evaluated at ω_n.
pub fn approx_zero(system: &AtomicSystem, n: u32) -> Result<ZeroRecord> {
    approx_zero_iterated(system, n, 0)
}

/// [`approx_zero`] followed by `iterations` fixed-point refinements that
/// re-evaluate the remote sum at the current zero estimate.
pub fn approx_zero_iterated(
    system: &AtomicSystem,
    n: u32,
    iterations: usize,
) -> Result<ZeroRecord> {
    let reference = system.reference_level(n)?;
    let omega_n = reference.omega;
    let numerator: f64 = system.multiplet(n).map(|l| l.zz_weight()).sum();
    let mut omega_eval = omega_n;
    let mut offset = 0.0;
    for _ in 0..=iterations {
        let denominator = remote_sum(system, n, omega_eval);
        if denominator == 0.0 || !denominator.is_finite() {
            return Err(Error::VanishingDenominator("remote level sum"));
        }
        offset = numerator / denominator;
        omega_eval = omega_n + offset;
    }
    let omega_zero = omega_n + offset;
    let gap = gaps(system)
        .into_iter()
        .find(|g| omega_zero > g.lo && omega_zero < g.hi)
        .unwrap_or(Gap {
            lo: system.poles().last().map(|p| p.omega).unwrap_or(0.0),
            hi: f64::INFINITY,
            upper_pole: usize::MAX,
            guaranteed: false,
        });
    Ok(ZeroRecord {
        omega_zero,
        bracket: (gap.lo, gap.hi),
        reference: reference.key,
        reference_omega: omega_n,
        offset,
        method: ZeroMethod::ApproxAnalytic,
        residual: zz(system, omega_zero).abs(),
    })
}
