//! Polarization-resolved Rayleigh scattering off an s₁/₂ ground level.
//!
//! The crate evaluates the parallel (`zz`) and crossed (`xz`) scattering
//! amplitudes of a one-electron-like atom from tabulated np_j level data,
//! locates the zeros of the parallel amplitude that sit between adjacent
//! resonances, and inverts measured zero positions into squared radial
//! matrix elements relative to a well-known resonance line.
//!
//! Units: frequencies in cm⁻¹, squared radial matrix elements in a₀².
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature when the
//! error type should interoperate with `std::error::Error` users that predate
//! `core::error`.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod amplitude;
pub mod atomic_data;
mod compensated;
pub mod error;
pub mod inversion;
pub mod linalg;
pub mod units;
pub mod zeros;

pub use amplitude::{
    amplitude, amplitude_split, cross_section, depolarization, dynamic_polarizability,
    evaluate_point, p_zz, q_xz, raw_amplitude, scan_spectrum, GuardPolicy, Polarization,
    SpectrumPoint, SpectrumScan,
};
pub use atomic_data::{
    f_to_msq, msq_to_f, AtomicSystem, ExcitedLevel, LevelKey, Pole, TailEstimate,
};
pub use error::{Error, Result};
pub use inversion::{
    forward_zeros, solve, tail_sensitivity, truncation_bound, Bracket, InversionProblem,
    InversionResult, MeasuredZero, Target,
};
pub use zeros::{
    approx_zero, find_zeros, find_zeros_resonance_only, zero_below_multiplet, zero_below_pole,
    SolverConfig,
    ZeroMethod, ZeroRecord, ZeroSearch,
};
