//! Randomized checks shared by the core suites and the acceptance run. Each
//! returns the worst relative error seen, or a description of the first
//! failure.

use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayzero_core::amplitude::cross_section;
use rayzero_core::{
    amplitude, amplitude_split, depolarization, find_zeros, p_zz, q_xz, raw_amplitude,
    AtomicSystem, GuardPolicy, Polarization, SolverConfig,
};

use super::{exact, level, random_omega, random_system};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Library sums against the rational oracle on `systems` random systems of
/// 2 to 10 levels, `omegas` frequencies each.
pub fn oracle(seed: u64, systems: usize, omegas: usize, tol: f64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guard = GuardPolicy::default();
    let mut worst: f64 = 0.0;
    for _ in 0..systems {
        let count = rng.random_range(2..=10);
        let sys = random_system(&mut rng, count);
        let multiplets = sys.multiplet_numbers();
        for _ in 0..omegas {
            let w = random_omega(&mut rng, &sys, guard.guard_band());
            let exclude = if rng.random_bool(0.5) {
                Some(multiplets[rng.random_range(0..multiplets.len())])
            } else {
                None
            };
            let checks = [
                ("A_zz", amplitude(&sys, w, Polarization::ZZ, &guard), exact::amplitude(&sys, w, Polarization::ZZ)),
                ("A_xz", amplitude(&sys, w, Polarization::XZ, &guard), exact::amplitude(&sys, w, Polarization::XZ)),
                ("p_zz", p_zz(&sys, w, exclude, &guard), exact::p_zz(&sys, w, exclude)),
                ("q_xz", q_xz(&sys, w, exclude, &guard), exact::q_xz(&sys, w, exclude)),
                ("sigma_zz", cross_section(&sys, w, Polarization::ZZ, &guard), exact::cross_section(&sys, w, Polarization::ZZ)),
                ("sigma_xz", cross_section(&sys, w, Polarization::XZ, &guard), exact::cross_section(&sys, w, Polarization::XZ)),
            ];
            for (what, got, want) in checks {
                let got = got.map_err(|e| format!("{what} at ω = {w}: {e}"))?;
                let err = exact::rel_err(got, &want);
                worst = worst.max(err);
                if !(err <= tol) {
                    return Err(format!("{what} at ω = {w}: rel err {err:e} in {sys:?}"));
                }
            }
        }
    }
    Ok(worst)
}

/// One zero per inter-pole gap, each a sign change and a local minimum of
/// the exact |A_zz|, with `P_L` at −1 away from the poles.
pub fn interleaving(seed: u64, systems: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();
    let guard = GuardPolicy::default();
    for _ in 0..systems {
        let count = rng.random_range(2..=10);
        let sys = random_system(&mut rng, count);
        let poles = sys.poles();
        let hi = poles.last().unwrap().omega;
        let found = find_zeros(&sys, (poles[0].omega, hi), &cfg).map_err(|e| e.to_string())?;
        if !found.multi_root_gaps.is_empty() || found.zeros.len() != poles.len() - 1 {
            return Err(format!("{} zeros for {} poles in {sys:?}", found.zeros.len(), poles.len()));
        }
        for (k, z) in found.zeros.iter().enumerate() {
            let (lo, up) = (poles[k].omega, poles[k + 1].omega);
            let w = z.omega_zero;
            if !(w > lo && w < up) {
                return Err(format!("zero {w} outside ({lo}, {up})"));
            }
            let d = 64.0 * f64::EPSILON * w;
            let left = exact::amplitude(&sys, w - d, Polarization::ZZ);
            let mid = exact::amplitude(&sys, w, Polarization::ZZ);
            let right = exact::amplitude(&sys, w + d, Polarization::ZZ);
            if !(left.is_negative() && right.is_positive()) {
                return Err(format!("no sign change at {w}"));
            }
            if mid.abs() > left.abs() || mid.abs() > right.abs() {
                return Err(format!("not a local minimum at {w}"));
            }
            if (w - lo).abs() > 1.0 && (up - w).abs() > 1.0 {
                let p = depolarization(&sys, w, &guard).map_err(|e| e.to_string())?;
                if !(p < -1.0 + 1e-6 || raw_amplitude(&sys, w, Polarization::XZ) == 0.0) {
                    return Err(format!("P_L = {p} at {w}"));
                }
            }
        }
    }
    Ok(())
}

/// Two-level systems against the closed-form root.
pub fn two_level(seed: u64, cases: usize, tol: f64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let w1 = rng.random_range(1000.0..30000.0);
        let w2 = w1 + rng.random_range(1.0..30000.0);
        let (j1, j2) = if rng.random_bool(0.5) { (1, 3) } else { (3, 1) };
        let (m1, m2) = (10f64.powf(rng.random_range(-3.0..1.5)), 10f64.powf(rng.random_range(-3.0..1.5)));
        let sys = AtomicSystem::new("two", vec![level(2, j1, w1, m1), level(3, j2, w2, m2)], None).unwrap();
        let s1 = if j1 == 3 { 2.0 * m1 } else { m1 };
        let s2 = if j2 == 3 { 2.0 * m2 } else { m2 };
        // s1·w1/(w1² − ω²) + s2·w2/(w2² − ω²) = 0
        let root = ((w1 * s1 * w2 * w2 + w2 * s2 * w1 * w1) / (w1 * s1 + w2 * s2)).sqrt();
        let found = find_zeros(&sys, (w1, w2), &cfg).map_err(|e| e.to_string())?;
        if found.zeros.len() != 1 {
            return Err(format!("{} roots between {w1} and {w2}", found.zeros.len()));
        }
        let err = rel(found.zeros[0].omega_zero, root);
        worst = worst.max(err);
        if !(err <= tol) {
            return Err(format!("{} vs {root}", found.zeros[0].omega_zero));
        }
    }
    Ok(worst)
}

/// Split form against the direct sum for every reference multiplet, and the
/// parity of both amplitudes under ω → −ω.
pub fn representation_and_parity(seed: u64, systems: usize, omegas: usize, tol: f64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let guard = GuardPolicy::default();
    let mut worst: f64 = 0.0;
    for _ in 0..systems {
        let count = rng.random_range(2..=10);
        let sys = random_system(&mut rng, count);
        let tail_xz = sys.tail().map_or(0.0, |t| t.q_xz / 9.0);
        for _ in 0..omegas {
            let w = random_omega(&mut rng, &sys, guard.guard_band());
            for pol in [Polarization::ZZ, Polarization::XZ] {
                let direct = amplitude(&sys, w, pol, &guard).map_err(|e| e.to_string())?;
                for n in sys.multiplet_numbers() {
                    let split = amplitude_split(&sys, w, pol, n, &guard).map_err(|e| e.to_string())?;
                    let err = rel(split, direct);
                    worst = worst.max(err);
                    if !(err <= tol) {
                        return Err(format!("{pol:?} split at n = {n}, ω = {w}: {split} vs {direct}"));
                    }
                }
            }
            let zz = raw_amplitude(&sys, w, Polarization::ZZ);
            let err = rel(raw_amplitude(&sys, -w, Polarization::ZZ), zz);
            worst = worst.max(err);
            if !(err <= tol) {
                return Err(format!("A_zz parity at {w}"));
            }
            // The constant crossed tail is the only even part of A_xz.
            let odd_plus = raw_amplitude(&sys, w, Polarization::XZ) - tail_xz;
            let odd_minus = raw_amplitude(&sys, -w, Polarization::XZ) - tail_xz;
            let err = (odd_minus + odd_plus).abs() / (odd_plus.abs() + tail_xz.abs());
            worst = worst.max(err);
            if !(err <= tol) {
                return Err(format!("A_xz parity at {w}"));
            }
        }
    }
    Ok(worst)
}
