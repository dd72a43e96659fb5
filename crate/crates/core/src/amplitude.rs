//! Rayleigh scattering amplitudes off the s₁/₂ ground level.
//!
//! Geometry is fixed: incident light propagates along y and is polarized
//! along z ([`Polarization::ZZ`]) or x ([`Polarization::XZ`]); the analyzer
//! transmits z. Scattering is elastic (ω′ = ω) and natural widths are left
//! out of the denominators; a [`GuardPolicy`] keeps evaluations away from
//! the poles instead.
//!
//! Both amplitudes carry the overall −1/9 of the near-multiplet form, which
//! makes them `A_zz = P_zz / 9` and `A_xz = Q_xz / 9` when the remote-level
//! sums run over every loaded level. `A_zz` coincides with the dynamic dipole
//! polarizability once converted to atomic units.

use alloc::vec::Vec;

use crate::atomic_data::{AtomicSystem, ExcitedLevel};
use crate::compensated::{quotient, Accumulator, TwoFloat};
use crate::error::{Error, Result};
use crate::units::sum_to_atomic_units;

/// Scale of [`cross_section`]. Only ratios and zeros are physical here.
pub const CROSS_SECTION_SCALE: f64 = 1.0;

const AMPLITUDE_PREFACTOR: f64 = 1.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    /// Incident along z, analyzed along z.
    ZZ,
    /// Incident along x, analyzed along z.
    XZ,
}

/// Minimum detuning (cm⁻¹) from any pole at which amplitudes are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardPolicy {
    guard_band: f64,
}

impl Default for GuardPolicy {
    fn default() -> Self {
        GuardPolicy { guard_band: 0.5 }
    }
}

impl GuardPolicy {
    pub fn new(guard_band: f64) -> Result<Self> {
        if !(guard_band > 0.0 && guard_band.is_finite()) {
            return Err(Error::NonPositive {
                what: "guard band",
                value: guard_band,
            });
        }
        Ok(GuardPolicy { guard_band })
    }

    pub fn guard_band(&self) -> f64 {
        self.guard_band
    }

    /// Rejects `omega` if it sits within the guard band of an included pole.
    pub fn check(&self, system: &AtomicSystem, omega: f64, exclude_n: Option<u32>) -> Result<()> {
        let nearest = system
            .levels()
            .iter()
            .filter(|l| Some(l.key.n) != exclude_n)
            .map(|l| (l, (omega - l.omega).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((level, distance)) if distance < self.guard_band => Err(Error::GuardBand {
                omega,
                pole: level.key,
                distance,
                guard: self.guard_band,
            }),
            _ => Ok(()),
        }
    }
}

/// Amplitudes and intensities at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub a_zz: f64,
    pub a_xz: f64,
    pub sigma_zz: f64,
    pub sigma_xz: f64,
    /// Linear depolarization degree; NaN where both intensities vanish.
    pub p_l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumScan {
    /// One point per accepted grid entry, in grid order.
    pub points: Vec<SpectrumPoint>,
    /// Grid entries skipped by the guard band, as (index, omega).
    pub rejected: Vec<(usize, f64)>,
    /// No tail estimate was attached to the system.
    pub truncated: bool,
}

#[inline]
fn resonant(weight: f64, omega_i: f64, omega: f64) -> TwoFloat {
    quotient(weight, TwoFloat::exact_sum(omega_i, -omega))
}

#[inline]
fn antiresonant(weight: f64, omega_i: f64, omega: f64) -> TwoFloat {
    quotient(weight, TwoFloat::exact_sum(omega_i, omega))
}

fn level_sum(
    system: &AtomicSystem,
    omega: f64,
    exclude_n: Option<u32>,
    pol: Polarization,
) -> Accumulator {
    let mut acc = Accumulator::default();
    for level in system.levels() {
        if Some(level.key.n) == exclude_n {
            continue;
        }
        match pol {
            Polarization::ZZ => {
                let w = level.zz_weight();
                acc.add_pair(resonant(w, level.omega, omega));
                acc.add_pair(antiresonant(w, level.omega, omega));
            }
            Polarization::XZ => {
                let w = level.xz_weight();
                acc.add_pair(resonant(w, level.omega, omega));
                acc.add_pair(antiresonant(-w, level.omega, omega));
            }
        }
    }
    if let Some(tail) = system.tail() {
        acc.add(match pol {
            Polarization::ZZ => tail.p_zz,
            Polarization::XZ => tail.q_xz,
        });
    }
    acc
}

fn check_nonnegative(omega: f64) -> Result<()> {
    if omega >= 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            what: "frequency",
            value: omega,
        })
    }
}

fn check_positive(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            what: "frequency",
            value: omega,
        })
    }
}

/// Sum over levels (other than multiplet `exclude_n`) of the parallel
/// contributions `2M₃/₂/(ω₃/₂ ∓ ω) + M₁/₂/(ω₁/₂ ∓ ω)`, plus the tail. a₀²·cm.
pub fn p_zz(
    system: &AtomicSystem,
    omega: f64,
    exclude_n: Option<u32>,
    guard: &GuardPolicy,
) -> Result<f64> {
    check_nonnegative(omega)?;
    guard.check(system, omega, exclude_n)?;
    Ok(level_sum(system, omega, exclude_n, Polarization::ZZ).value())
}

/// Crossed-polarization counterpart of [`p_zz`]:
/// `M₃/₂/(ω₃/₂−ω) − M₁/₂/(ω₁/₂−ω) − M₃/₂/(ω₃/₂+ω) + M₁/₂/(ω₁/₂+ω)` per multiplet.
pub fn q_xz(
    system: &AtomicSystem,
    omega: f64,
    exclude_n: Option<u32>,
    guard: &GuardPolicy,
) -> Result<f64> {
    check_nonnegative(omega)?;
    guard.check(system, omega, exclude_n)?;
    Ok(level_sum(system, omega, exclude_n, Polarization::XZ).value())
}

/// Amplitude as an unrestricted real function of ω: no guard band and any
/// sign of ω. Used by the root finder and for symmetry checks.
pub fn raw_amplitude(system: &AtomicSystem, omega: f64, pol: Polarization) -> f64 {
    AMPLITUDE_PREFACTOR * level_sum(system, omega, None, pol).value()
}

/// Scattering amplitude summed over every loaded level. a₀²·cm.
pub fn amplitude(
    system: &AtomicSystem,
    omega: f64,
    pol: Polarization,
    guard: &GuardPolicy,
) -> Result<f64> {
    check_positive(omega)?;
    guard.check(system, omega, None)?;
    Ok(raw_amplitude(system, omega, pol))
}

/// Near-multiplet form: explicit terms for multiplet `reference_n` written in
/// the detuning `Δ = ω − ω(n, 3/2)` and splitting `Δfs`, minus the remote sum.
/// Agrees with [`amplitude`] for every choice of `reference_n`.
pub fn amplitude_split(
    system: &AtomicSystem,
    omega: f64,
    pol: Polarization,
    reference_n: u32,
    guard: &GuardPolicy,
) -> Result<f64> {
    check_positive(omega)?;
    guard.check(system, omega, None)?;
    let reference = system.reference_level(reference_n)?;
    let mut m32 = 0.0;
    let mut m12 = 0.0;
    let mut omega12 = reference.omega;
    for level in system.multiplet(reference_n) {
        match level.key.twice_j {
            3 => m32 = level.m_sq,
            _ => {
                m12 = level.m_sq;
                omega12 = level.omega;
            }
        }
    }
    // Δ and Δ + Δfs are formed exactly as unevaluated pairs.
    let delta = TwoFloat::exact_sum(omega, -reference.omega);
    let fs = TwoFloat::exact_sum(reference.omega, -omega12);
    let delta_fs = delta.add(fs);
    let delta_2w = delta.add_f64(-2.0 * omega);
    let delta_fs_2w = delta_fs.add_f64(-2.0 * omega);

    // A = −(1/9)(near − remote): fold the near terms into the remote sum
    // with flipped numerators so nothing is rounded in between.
    let mut acc = level_sum(system, omega, Some(reference_n), pol);
    let terms = match pol {
        Polarization::ZZ => [
            (2.0 * m32, delta),
            (m12, delta_fs),
            (2.0 * m32, delta_2w),
            (m12, delta_fs_2w),
        ],
        Polarization::XZ => [
            (m32, delta),
            (-m12, delta_fs),
            (-m32, delta_2w),
            (m12, delta_fs_2w),
        ],
    };
    for (num, den) in terms {
        if num != 0.0 {
            acc.add_pair(quotient(-num, den));
        }
    }
    Ok(AMPLITUDE_PREFACTOR * acc.value())
}

/// Relative differential cross-section `K·ω⁴·|A|²` (elastic, ω′ = ω).
pub fn cross_section(
    system: &AtomicSystem,
    omega: f64,
    pol: Polarization,
    guard: &GuardPolicy,
) -> Result<f64> {
    cross_section_scaled(system, omega, pol, guard, CROSS_SECTION_SCALE)
}

pub fn cross_section_scaled(
    system: &AtomicSystem,
    omega: f64,
    pol: Polarization,
    guard: &GuardPolicy,
    scale: f64,
) -> Result<f64> {
    let a = amplitude(system, omega, pol, guard)?;
    Ok(intensity(omega, a, scale))
}

#[inline]
fn intensity(omega: f64, a: f64, scale: f64) -> f64 {
    let w2 = omega * omega;
    scale * (w2 * w2) * (a * a)
}

fn depolarization_from(omega: f64, a_zz: f64, a_xz: f64) -> Result<f64> {
    let zz = a_zz * a_zz;
    let xz = a_xz * a_xz;
    let den = zz + xz;
    if den == 0.0 {
        return Err(Error::UndefinedDepolarization(omega));
    }
    Ok((zz - xz) / den)
}

/// Linear depolarization degree `(σ_zz − σ_xz)/(σ_zz + σ_xz)`.
pub fn depolarization(system: &AtomicSystem, omega: f64, guard: &GuardPolicy) -> Result<f64> {
    let a_zz = amplitude(system, omega, Polarization::ZZ, guard)?;
    let a_xz = raw_amplitude(system, omega, Polarization::XZ);
    depolarization_from(omega, a_zz, a_xz)
}

pub fn evaluate_point(
    system: &AtomicSystem,
    omega: f64,
    guard: &GuardPolicy,
) -> Result<SpectrumPoint> {
    let a_zz = amplitude(system, omega, Polarization::ZZ, guard)?;
    let a_xz = raw_amplitude(system, omega, Polarization::XZ);
    Ok(SpectrumPoint {
        omega,
        a_zz,
        a_xz,
        sigma_zz: intensity(omega, a_zz, CROSS_SECTION_SCALE),
        sigma_xz: intensity(omega, a_xz, CROSS_SECTION_SCALE),
        p_l: depolarization_from(omega, a_zz, a_xz).unwrap_or(f64::NAN),
    })
}

/// Evaluates every grid point, skipping (and reporting) guard-band violators.
pub fn scan_spectrum(
    system: &AtomicSystem,
    grid: &[f64],
    guard: &GuardPolicy,
) -> Result<SpectrumScan> {
    collect_scan(system, grid.iter().map(|&w| evaluate_point(system, w, guard)))
}

/// Assembles a scan from per-point results computed in grid order.
///
/// Guard-band rejections are recorded; any other error aborts the scan.
pub fn collect_scan(
    system: &AtomicSystem,
    results: impl IntoIterator<Item = Result<SpectrumPoint>>,
) -> Result<SpectrumScan> {
    let mut points = Vec::new();
    let mut rejected = Vec::new();
    for (idx, res) in results.into_iter().enumerate() {
        match res {
            Ok(p) => points.push(p),
            Err(Error::GuardBand { omega, .. }) => rejected.push((idx, omega)),
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyGrid {
            rejected: rejected.len(),
        });
    }
    Ok(SpectrumScan {
        points,
        rejected,
        truncated: system.is_truncated(),
    })
}

/// Dynamic dipole polarizability of the ground level in atomic units:
/// `α(ω) = (1/9) Σ (2M₃/₂ + M₁/₂)·2ω_i/(ω_i² − ω²)` (plus tail), with
/// frequencies converted to hartree. `ω = 0` gives the static value.
pub fn dynamic_polarizability(
    system: &AtomicSystem,
    omega: f64,
    guard: &GuardPolicy,
) -> Result<f64> {
    check_nonnegative(omega)?;
    guard.check(system, omega, None)?;
    let sum = level_sum(system, omega, None, Polarization::ZZ).value();
    Ok(sum_to_atomic_units(AMPLITUDE_PREFACTOR * sum))
}

/// Static polarizability contributed by the loaded levels alone (no tail).
pub fn partial_static_polarizability<'a>(levels: impl IntoIterator<Item = &'a ExcitedLevel>) -> f64 {
    let mut acc = Accumulator::default();
    for level in levels {
        acc.add_pair(quotient(2.0 * level.zz_weight(), TwoFloat { hi: level.omega, lo: 0.0 }));
    }
    sum_to_atomic_units(AMPLITUDE_PREFACTOR * acc.value())
}
