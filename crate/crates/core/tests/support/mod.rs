//! Independent reference implementations shared by the integration tests.
//!
//! `exact` evaluates the level sums in rational arithmetic from the combined
//! form `2ω_i/(ω_i² − ω²)` (resp. `2ω/(ω_i² − ω²)`), which shares no code or
//! algebraic arrangement with the library. `sublevel` rebuilds both
//! amplitudes from single-electron dipole matrix elements and
//! Clebsch-Gordan coefficients, summed over every magnetic sublevel.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayzero_core::{AtomicSystem, ExcitedLevel, LevelKey, Polarization, TailEstimate};

pub mod checks;

/// Random system of `count` levels between 1000 and 60000 cm⁻¹, paired into
/// fine-structure doublets or left single at random. Half get a tail.
pub fn random_system<R: Rng>(rng: &mut R, count: usize) -> AtomicSystem {
    let mut omegas: Vec<f64> = (0..count).map(|_| rng.random_range(1000.0..60000.0)).collect();
    omegas.sort_by(f64::total_cmp);
    for i in 1..omegas.len() {
        if omegas[i] - omegas[i - 1] < 2.0 {
            omegas[i] = omegas[i - 1] + 2.0 + rng.random_range(0.0..10.0);
        }
    }
    let mut levels = Vec::with_capacity(count);
    let mut n = 2;
    let mut i = 0;
    while i < count {
        let strength = |rng: &mut R| 10f64.powf(rng.random_range(-4.0..1.5));
        let pair = i + 1 < count && rng.random_bool(0.6);
        if pair {
            // Either ordering of the doublet is allowed.
            let (lo_j, hi_j) = if rng.random_bool(0.8) { (1, 3) } else { (3, 1) };
            levels.push(level(n, lo_j, omegas[i], strength(rng)));
            levels.push(level(n, hi_j, omegas[i + 1], strength(rng)));
            i += 2;
        } else {
            let j = if rng.random_bool(0.5) { 1 } else { 3 };
            levels.push(level(n, j, omegas[i], strength(rng)));
            i += 1;
        }
        n += 1;
    }
    let tail = rng.random_bool(0.5).then(|| TailEstimate {
        p_zz: rng.random_range(0.0..1e-3),
        q_xz: rng.random_range(-1e-5..1e-5),
        rel_unc: 0.1,
    });
    AtomicSystem::new("random", levels, tail).unwrap()
}

pub fn level(n: u32, twice_j: u32, omega: f64, m_sq: f64) -> ExcitedLevel {
    ExcitedLevel::new(LevelKey::p(n, twice_j).unwrap(), omega, m_sq, 0.05).unwrap()
}

/// A frequency in (0, 65000) at least `guard` away from every level.
pub fn random_omega<R: Rng>(rng: &mut R, system: &AtomicSystem, guard: f64) -> f64 {
    loop {
        let w: f64 = rng.random_range(1.0..65000.0);
        if system.levels().iter().all(|l| (l.omega - w).abs() >= guard) {
            return w;
        }
    }
}

pub mod exact {
    //! Fractions are kept unreduced while summing; one gcd at the end.

    use super::*;
    use num::One;

    #[derive(Clone)]
    pub struct Frac {
        num: BigInt,
        den: BigInt,
    }

    impl Frac {
        fn int(v: i64) -> Self {
            Frac {
                num: BigInt::from(v),
                den: BigInt::one(),
            }
        }

        fn add(&self, o: &Frac) -> Frac {
            Frac {
                num: &self.num * &o.den + &o.num * &self.den,
                den: &self.den * &o.den,
            }
        }

        fn mul(&self, o: &Frac) -> Frac {
            Frac {
                num: &self.num * &o.num,
                den: &self.den * &o.den,
            }
        }

        fn sub(&self, o: &Frac) -> Frac {
            self.add(&Frac {
                num: -&o.num,
                den: o.den.clone(),
            })
        }

        fn div(&self, o: &Frac) -> Frac {
            Frac {
                num: &self.num * &o.den,
                den: &self.den * &o.num,
            }
        }

        pub fn to_rational(&self) -> BigRational {
            BigRational::new(self.num.clone(), self.den.clone())
        }
    }

    pub fn q(x: f64) -> Frac {
        let r = BigRational::from_float(x).expect("finite");
        Frac {
            num: r.numer().clone(),
            den: r.denom().clone(),
        }
    }

    /// Parallel sum over levels outside `exclude`, plus tail.
    pub fn p_zz_frac(system: &AtomicSystem, omega: f64, exclude: Option<u32>) -> Frac {
        let w = q(omega);
        let w2 = w.mul(&w);
        let mut sum = Frac::int(0);
        for l in system.levels().iter().filter(|l| Some(l.key.n) != exclude) {
            let oi = q(l.omega);
            let weight = Frac::int(if l.key.twice_j == 3 { 4 } else { 2 });
            let term = weight.mul(&q(l.m_sq)).mul(&oi).div(&oi.mul(&oi).sub(&w2));
            sum = sum.add(&term);
        }
        if let Some(t) = system.tail() {
            sum = sum.add(&q(t.p_zz));
        }
        sum
    }

    pub fn q_xz_frac(system: &AtomicSystem, omega: f64, exclude: Option<u32>) -> Frac {
        let w = q(omega);
        let w2 = w.mul(&w);
        let mut sum = Frac::int(0);
        for l in system.levels().iter().filter(|l| Some(l.key.n) != exclude) {
            let oi = q(l.omega);
            let weight = Frac::int(if l.key.twice_j == 3 { 2 } else { -2 });
            let term = weight.mul(&q(l.m_sq)).mul(&w).div(&oi.mul(&oi).sub(&w2));
            sum = sum.add(&term);
        }
        if let Some(t) = system.tail() {
            sum = sum.add(&q(t.q_xz));
        }
        sum
    }

    fn amplitude_frac(system: &AtomicSystem, omega: f64, pol: Polarization) -> Frac {
        let s = match pol {
            Polarization::ZZ => p_zz_frac(system, omega, None),
            Polarization::XZ => q_xz_frac(system, omega, None),
        };
        s.div(&Frac::int(9))
    }

    pub fn p_zz(system: &AtomicSystem, omega: f64, exclude: Option<u32>) -> BigRational {
        p_zz_frac(system, omega, exclude).to_rational()
    }

    pub fn q_xz(system: &AtomicSystem, omega: f64, exclude: Option<u32>) -> BigRational {
        q_xz_frac(system, omega, exclude).to_rational()
    }

    pub fn amplitude(system: &AtomicSystem, omega: f64, pol: Polarization) -> BigRational {
        amplitude_frac(system, omega, pol).to_rational()
    }

    pub fn cross_section(system: &AtomicSystem, omega: f64, pol: Polarization) -> BigRational {
        let a = amplitude_frac(system, omega, pol);
        let w = q(omega);
        let w2 = w.mul(&w);
        w2.mul(&w2).mul(&a).mul(&a).to_rational()
    }

    /// `|approx − exact| / |exact|`, evaluated exactly then rounded.
    pub fn rel_err(approx: f64, exact: &BigRational) -> f64 {
        if exact.is_zero() {
            return if approx == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let a = BigRational::from_float(approx).expect("finite");
        ((a - exact).abs() / exact.abs())
            .to_f64()
            .unwrap_or(f64::INFINITY)
    }
}

pub mod sublevel {
    use super::*;

    /// `(m_l, 2m_s, coefficient)` of each |j m⟩ state in the |m_l m_s⟩ basis.
    fn p_states(twice_j: u32) -> Vec<Vec<(i32, i32, f64)>> {
        let r = f64::sqrt;
        match twice_j {
            3 => vec![
                vec![(1, 1, 1.0)],
                vec![(0, 1, r(2.0 / 3.0)), (1, -1, r(1.0 / 3.0))],
                vec![(-1, 1, r(1.0 / 3.0)), (0, -1, r(2.0 / 3.0))],
                vec![(-1, -1, 1.0)],
            ],
            1 => vec![
                vec![(0, 1, -r(1.0 / 3.0)), (1, -1, r(2.0 / 3.0))],
                vec![(-1, 1, -r(2.0 / 3.0)), (0, -1, r(1.0 / 3.0))],
            ],
            _ => unreachable!(),
        }
    }

    /// ⟨p m_l| r_c |s⟩ in units of the radial integral.
    fn orbital(c: char, ml: i32) -> f64 {
        match (c, ml) {
            ('z', 0) => 1.0 / 3f64.sqrt(),
            ('x', 1) => -1.0 / 6f64.sqrt(),
            ('x', -1) => 1.0 / 6f64.sqrt(),
            _ => 0.0,
        }
    }

    fn dipole(c: char, state: &[(i32, i32, f64)], ms: i32) -> f64 {
        state
            .iter()
            .filter(|(_, s, _)| *s == ms)
            .map(|(ml, _, coef)| coef * orbital(c, *ml))
            .sum()
    }

    /// Amplitude between ground sublevels `ms_in` → `ms_out` (twice m_s).
    pub fn amplitude(
        levels: &[ExcitedLevel],
        omega: f64,
        incident: char,
        analyzed: char,
        ms_in: i32,
        ms_out: i32,
    ) -> f64 {
        let mut sum = 0.0;
        for l in levels {
            for st in p_states(l.key.twice_j) {
                let absorb_first = dipole(analyzed, &st, ms_out) * dipole(incident, &st, ms_in);
                let emit_first = dipole(incident, &st, ms_out) * dipole(analyzed, &st, ms_in);
                sum += l.m_sq * (absorb_first / (l.omega - omega) + emit_first / (l.omega + omega));
            }
        }
        sum
    }

    /// Root-mean-square amplitude averaged over the initial sublevel and
    /// summed over the final one.
    pub fn rms(levels: &[ExcitedLevel], omega: f64, incident: char, analyzed: char) -> f64 {
        let mut s = 0.0;
        for ms_in in [-1, 1] {
            for ms_out in [-1, 1] {
                let a = amplitude(levels, omega, incident, analyzed, ms_in, ms_out);
                s += a * a / 2.0;
            }
        }
        s.sqrt()
    }
}
