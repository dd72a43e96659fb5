//! Physical constants and unit conversions.
//!
//! Frequencies are carried in cm⁻¹ and squared radial matrix elements in a₀²
//! throughout the crate. Amplitudes and level sums therefore come out in
//! a₀²·cm; multiply by [`HARTREE_CM`] to express them in atomic units.

/// One hartree in wavenumbers (CODATA 2018, 2R∞).
pub const HARTREE_CM: f64 = 219_474.631_363_20;

/// Bohr radius in metres (CODATA 2018).
pub const BOHR_RADIUS_M: f64 = 5.291_772_109_03e-11;

/// Elementary charge in coulombs (exact, SI 2019).
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;

#[inline]
pub fn cm_to_hartree(omega_cm: f64) -> f64 {
    omega_cm / HARTREE_CM
}

#[inline]
pub fn hartree_to_cm(omega_au: f64) -> f64 {
    omega_au * HARTREE_CM
}

/// Converts a level sum in a₀²·cm (M / ω with ω in cm⁻¹) to atomic units.
#[inline]
pub fn sum_to_atomic_units(value: f64) -> f64 {
    value * HARTREE_CM
}

/// Inverse of [`sum_to_atomic_units`].
#[inline]
pub fn sum_from_atomic_units(value_au: f64) -> f64 {
    value_au / HARTREE_CM
}
