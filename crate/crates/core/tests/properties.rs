mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayzero_core::{
    amplitude, amplitude_split, depolarization, find_zeros, raw_amplitude, AtomicSystem,
    GuardPolicy, Polarization, SolverConfig,
};
use support::{checks, random_omega, random_system};

fn system_strategy() -> impl Strategy<Value = AtomicSystem> {
    (any::<u64>(), 2usize..=10).prop_map(|(seed, count)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_system(&mut rng, count)
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_form_matches_direct_sum(sys in system_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let guard = GuardPolicy::default();
        for _ in 0..10 {
            let w = random_omega(&mut rng, &sys, 0.5);
            for pol in [Polarization::ZZ, Polarization::XZ] {
                let direct = amplitude(&sys, w, pol, &guard).unwrap();
                for n in sys.multiplet_numbers() {
                    let split = amplitude_split(&sys, w, pol, n, &guard).unwrap();
                    prop_assert!(close(split, direct, 1e-12), "n={} ω={}: {} vs {}", n, w, split, direct);
                }
            }
        }
    }

    #[test]
    fn parity_in_omega(sys in system_strategy(), w in 1.0f64..65000.0) {
        let zz = raw_amplitude(&sys, w, Polarization::ZZ);
        let xz = raw_amplitude(&sys, w, Polarization::XZ);
        let tail_xz = sys.tail().map_or(0.0, |t| t.q_xz / 9.0);
        prop_assert!(close(raw_amplitude(&sys, -w, Polarization::ZZ), zz, 1e-12));
        // The constant crossed tail is the only even part of A_xz.
        let odd_plus = xz - tail_xz;
        let odd_minus = raw_amplitude(&sys, -w, Polarization::XZ) - tail_xz;
        prop_assert!((odd_minus + odd_plus).abs() <= 1e-12 * (odd_plus.abs() + tail_xz.abs()));
    }

    #[test]
    fn depolarization_bounded(sys in system_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let guard = GuardPolicy::default();
        for _ in 0..20 {
            let w = random_omega(&mut rng, &sys, 0.5);
            if let Ok(p) = depolarization(&sys, w, &guard) {
                prop_assert!((-1.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn zeros_invariant_under_global_scaling(sys in system_strategy(), scale in 1e-3f64..1e3) {
        let sys = sys.with_tail(None);
        let scaled = sys.map_strengths(|l| l.m_sq * scale).unwrap();
        let cfg = SolverConfig::default();
        let hi = sys.poles().last().unwrap().omega;
        let a = find_zeros(&sys, (0.0, hi), &cfg).unwrap();
        let b = find_zeros(&scaled, (0.0, hi), &cfg).unwrap();
        prop_assert_eq!(a.zeros.len(), b.zeros.len());
        for (x, y) in a.zeros.iter().zip(&b.zeros) {
            prop_assert!(close(x.omega_zero, y.omega_zero, 1e-12));
        }
    }
}

#[test]
fn zeros_interleave_poles() {
    checks::interleaving(0x5eed_0004, 100).unwrap();
}

#[test]
fn two_level_roots_match_closed_form() {
    checks::two_level(0x5eed_0005, 200, 1e-10).unwrap();
}
