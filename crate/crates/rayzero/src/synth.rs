//! Synthetic measurement sets and Monte-Carlo repeats with seeded noise.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rayzero_core::inversion::{solve, Bracket, InversionProblem, MeasuredZero, Target};
use rayzero_core::{zero_below_pole, AtomicSystem, Error, Result, SolverConfig};

use crate::problem::{MeasurementSpec, ProblemFile, TailSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    /// Written verbatim into the problem file.
    pub dataset: String,
    /// Attached to the system before forward modelling, and written out.
    pub tail: Option<TailSpec>,
    pub unknowns: Vec<Target>,
    pub fiducials: Vec<Target>,
    /// True strength of each unknown, a₀². `None` keeps the dataset value.
    pub truth: Vec<Option<f64>>,
    /// Standard deviation of the Gaussian noise added to each zero, cm⁻¹.
    pub noise: f64,
    /// Quoted measurement uncertainty, cm⁻¹.
    pub sigma: f64,
    pub seed: u64,
    /// Measure every inter-pole gap instead of only those next to unknowns.
    pub all_gaps: bool,
}

/// `system` with each unknown rescaled to its truth value.
pub fn truth_system(system: &AtomicSystem, unknowns: &[Target], truth: &[f64]) -> Result<AtomicSystem> {
    let current: Vec<f64> = unknowns.iter().map(|t| t.value_in(system)).collect();
    system.map_strengths(|l| match unknowns.iter().position(|t| t.covers(l.key)) {
        Some(k) => l.m_sq * truth[k] / current[k],
        None => l.m_sq,
    })
}

/// Upper pole indices of the gaps that constrain the unknowns.
pub fn select_gaps(system: &AtomicSystem, unknowns: &[Target], all: bool) -> Result<Vec<usize>> {
    let n_poles = system.poles().len();
    if all {
        return Ok((1..n_poles).collect());
    }
    let mut chosen = Vec::new();
    for t in unknowns {
        let mut found = false;
        for level in system.levels().iter().filter(|l| t.covers(l.key)) {
            let pole = system.pole_of(level.key)?;
            // The resonance pole has no gap below it; use the one above.
            let gap = if pole == 0 { 1 } else { pole };
            if gap < n_poles {
                chosen.push(gap);
                found = true;
            }
        }
        if !found {
            return Err(Error::InvalidProblem(format!("no inter-pole gap constrains {t}")));
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    Ok(chosen)
}

fn first_key(system: &AtomicSystem, pole: usize) -> rayzero_core::LevelKey {
    system.levels()[system.poles()[pole].members[0]].key
}

/// Forward-models the zeros of the truth system and adds seeded noise.
pub fn synthesize(system: &AtomicSystem, spec: &Synthesis, config: &SolverConfig) -> Result<ProblemFile> {
    if spec.unknowns.len() != spec.truth.len() {
        return Err(Error::InvalidProblem("one truth entry per unknown is required".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::NonPositive {
            what: "noise level",
            value: spec.noise,
        });
    }
    let with_tail;
    let system = match &spec.tail {
        Some(tail) => {
            with_tail = system.clone().with_tail(Some(tail.resolve(system)?));
            &with_tail
        }
        None => system,
    };
    let truth: Vec<f64> = spec
        .unknowns
        .iter()
        .zip(&spec.truth)
        .map(|(t, v)| v.unwrap_or_else(|| t.value_in(system)))
        .collect();
    for (t, &v) in spec.unknowns.iter().zip(&truth) {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidProblem(format!("truth for {t} must be positive, got {v}")));
        }
        if t.value_in(system) == 0.0 {
            return Err(Error::InvalidProblem(format!("{t} matches no loaded level")));
        }
    }
    let true_system = truth_system(system, &spec.unknowns, &truth)?;
    let gaps = select_gaps(&true_system, &spec.unknowns, spec.all_gaps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.noise).map_err(|_| Error::NonPositive {
        what: "noise level",
        value: spec.noise,
    })?;
    let mut measurements = Vec::with_capacity(gaps.len());
    for &pole in &gaps {
        let zero = zero_below_pole(&true_system, pole, config)?;
        let noise = if spec.noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
        measurements.push(MeasurementSpec {
            lower: Some(first_key(&true_system, pole - 1).to_string()),
            upper: first_key(&true_system, pole).to_string(),
            omega_zero: zero.omega_zero + noise,
            sigma: spec.sigma,
        });
    }
    let truth_table: BTreeMap<String, f64> = spec
        .unknowns
        .iter()
        .zip(&truth)
        .map(|(t, v)| (t.to_string(), *v))
        .collect();
    Ok(ProblemFile {
        dataset: spec.dataset.clone(),
        unknowns: spec.unknowns.iter().map(Target::to_string).collect(),
        fiducials: spec.fiducials.iter().map(Target::to_string).collect(),
        tail: spec.tail,
        truth: truth_table,
        measurements,
    })
}

/// Refits `problem` `repeats` times with Gaussian noise of width `noise` added
/// to `true_zeros`. Repeat `i` draws from its own stream seeded by `seed + i`,
/// so the result does not depend on the thread count.
pub fn monte_carlo(
    problem: &InversionProblem,
    true_zeros: &[f64],
    noise: f64,
    repeats: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<Vec<Vec<f64>>> {
    if true_zeros.len() != problem.measurements().len() {
        return Err(Error::InvalidProblem("one true zero per measurement is required".into()));
    }
    let normal = Normal::new(0.0, noise).map_err(|_| Error::NonPositive {
        what: "noise level",
        value: noise,
    })?;
    (0..repeats)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let measurements = problem
                .measurements()
                .iter()
                .zip(true_zeros)
                .map(|(m, &z)| {
                    let bracket: Bracket = m.bracket;
                    MeasuredZero::new(z + normal.sample(&mut rng), m.sigma_omega, bracket)
                })
                .collect::<Result<Vec<_>>>()?;
            let noisy = InversionProblem::new(
                problem.system().clone(),
                problem.unknowns().to_vec(),
                problem.fiducials().to_vec(),
                measurements,
            )?;
            Ok(solve(&noisy, config)?.values)
        })
        .collect()
}
